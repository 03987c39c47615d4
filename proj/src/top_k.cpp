// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <sstream>

#include "evpcc/error.hpp"
#include "evpcc/quality.hpp"

namespace evpcc {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  if (!lines.empty() && lines.front().starts_with("source_id")) lines.erase(lines.begin());
  return lines;
}

}  // namespace

std::vector<Prediction> parse_predictions(const std::string& text) {
  std::vector<Prediction> out;
  std::set<std::string> seen;
  std::size_t row = 0;
  for (const std::string& line : data_lines(text)) {
    ++row;
    const auto fields = split(line, ',');
    if (fields.size() < 2 || trim(fields[0]).empty()) {
      throw Error(ErrorCode::kParse, "prediction row " + std::to_string(row) + " is malformed: " + line);
    }
    Prediction p;
    p.source_id = trim(fields[0]);
    if (!seen.insert(p.source_id).second) {
      throw Error(ErrorCode::kParse, "duplicate prediction row for " + p.source_id);
    }
    if (fields.size() == 2 && fields[1].find(':') != std::string::npos) {
      std::vector<std::pair<std::string, double>> scored;
      for (const std::string& item : split(fields[1], ';')) {
        const std::string entry = trim(item);
        if (entry.empty()) continue;
        const auto colon = entry.rfind(':');
        if (colon == std::string::npos || colon == 0) {
          throw Error(ErrorCode::kParse, "prediction row " + std::to_string(row) + ": expected label:score");
        }
        try {
          std::size_t used = 0;
          const std::string score_text = entry.substr(colon + 1);
          const double score = std::stod(score_text, &used);
          if (used != score_text.size()) throw std::invalid_argument("trailing");
          scored.emplace_back(entry.substr(0, colon), score);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParse, "prediction row " + std::to_string(row) + ": bad score in " + entry);
        }
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      for (auto& [label, score] : scored) p.ranked.push_back(std::move(label));
    } else {
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const std::string label = trim(fields[i]);
        if (label.empty()) throw Error(ErrorCode::kParse, "prediction row " + std::to_string(row) + ": empty label");
        p.ranked.push_back(label);
      }
    }
    if (p.ranked.empty()) throw Error(ErrorCode::kParse, "prediction row " + std::to_string(row) + " has no labels");
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::string> parse_ground_truth(const std::string& text) {
  std::map<std::string, std::string> truth;
  for (const std::string& line : data_lines(text)) {
    const auto fields = split(line, ',');
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      throw Error(ErrorCode::kParse, "ground-truth row is malformed: " + line);
    }
    if (!truth.emplace(trim(fields[0]), trim(fields[1])).second) {
      throw Error(ErrorCode::kParse, "duplicate ground-truth row for " + trim(fields[0]));
    }
  }
  return truth;
}

double top_k(std::span<const Prediction> predictions, const std::map<std::string, std::string>& truth,
             std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions");
  std::size_t hits = 0;
  for (const Prediction& p : predictions) {
    const auto it = truth.find(p.source_id);
    if (it == truth.end()) throw Error(ErrorCode::kParse, "unknown sequence in predictions: " + p.source_id);
    const std::size_t depth = std::min(k, p.ranked.size());
    if (std::find(p.ranked.begin(), p.ranked.begin() + static_cast<std::ptrdiff_t>(depth), it->second) !=
        p.ranked.begin() + static_cast<std::ptrdiff_t>(depth)) {
      ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace evpcc
