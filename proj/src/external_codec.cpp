// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <sys/wait.h>

#include "evpcc/error.hpp"
#include "evpcc/octree_codec.hpp"

namespace evpcc {

ExternalCodecCommand ExternalCodecCommand::parse(const std::string& spec) {
  const auto sep = spec.find(';');
  if (sep == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "external codec needs \"<encode cmd>;<decode cmd>\"");
  }
  ExternalCodecCommand cmd{spec.substr(0, sep), spec.substr(sep + 1)};
  for (const auto* part : {&cmd.encode_cmd, &cmd.decode_cmd}) {
    if (part->find_first_not_of(" \t") == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "external codec command is empty");
    }
  }
  return cmd;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

void run_command(const std::string& command, std::string& log) {
  log += "$ " + command + "\n";
  const std::string full = "(" + command + ") 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) throw Error(ErrorCode::kExternalCommand, "cannot start: " + command);
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof(buffer), pipe)) > 0) log.append(buffer, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    throw Error(ErrorCode::kExternalCommand,
                "command exited with status " + std::to_string(code) + ": " + command + "\n" + log);
  }
}

}  // namespace

ExternalCodecResult run_external_codec(const ExternalCodecCommand& cmd, const std::filesystem::path& input_ply,
                                       const std::filesystem::path& workdir, Polarity polarity) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + workdir.string() + ": " + ec.message());

  const std::string stem = input_ply.stem().string();
  const fs::path bin = workdir / (stem + ".bin");
  const fs::path out = workdir / (stem + ".dec.ply");
  fs::remove(bin, ec);
  fs::remove(out, ec);

  auto expand = [&](const std::string& tmpl) {
    std::string s = substitute(tmpl, "{in}", shell_quote(input_ply.string()));
    s = substitute(s, "{bin}", shell_quote(bin.string()));
    return substitute(s, "{out}", shell_quote(out.string()));
  };

  ExternalCodecResult result;
  run_command(expand(cmd.encode_cmd), result.log);
  if (!fs::exists(bin)) {
    throw Error(ErrorCode::kExternalCommand, "encoder produced no bitstream at " + bin.string() + "\n" + result.log);
  }
  result.compressed_bytes = static_cast<std::size_t>(fs::file_size(bin));
  run_command(expand(cmd.decode_cmd), result.log);
  if (!fs::exists(out)) {
    throw Error(ErrorCode::kExternalCommand, "decoder produced no output at " + out.string() + "\n" + result.log);
  }
  try {
    result.decoded = load_ply(out, polarity);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string(e.what()) + "\n" + result.log);
  }
  return result;
}

}  // namespace evpcc
