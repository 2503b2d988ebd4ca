#pragma once

#include <modelscope/modelscope.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cli {

using nlohmann::json;

struct CString {
  char* p = nullptr;
  ~CString() { ms_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

/// Failure of a C API call, carrying its status.
struct ApiError : std::runtime_error {
  ms_status status;
  ApiError(ms_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

inline void check(ms_status s) {
  if (s != MS_OK) throw ApiError(s, ms_last_error());
}

inline json error_report(ms_status s, const std::string& message) {
  return {{"error", {{"status", ms_status_name(s)}, {"code", static_cast<int>(s)}, {"message", message}}}};
}

/// Validated config with defaults filled in.
inline json normalize(const json& cfg) {
  CString out;
  check(ms_config_normalize(cfg.dump().c_str(), &out.p));
  return json::parse(out.str());
}

inline json run(const json& cfg) {
  CString out;
  check(ms_run_json(cfg.dump().c_str(), &out.p));
  return json::parse(out.str());
}

inline std::string svg(const std::string& doc, const char* kind) {
  CString out;
  check(ms_render_svg(doc.c_str(), kind, &out.p));
  return out.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary file and a rename so readers never see partial output.
inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
  }
  std::filesystem::rename(tmp, p);
}

/// Writes the result document and, when requested, its plots. Returns the
/// path of the document.
inline std::filesystem::path persist(const json& doc, const std::filesystem::path& out_dir, bool plots) {
  const std::string kind = doc.at("kind").get<std::string>();
  const auto path = out_dir / (kind + ".json");
  const std::string text = doc.dump(1);
  write_file(path, text + "\n");
  if (plots) {
    if (kind == "vis") {
      for (const char* k : {"lvk", "boot", "vip"})
        write_file(out_dir / "plots" / (std::string(k) + ".svg"), svg(text, k));
    } else if (kind == "af") {
      write_file(out_dir / "plots" / "af.svg", svg(text, "af"));
    }
  }
  return path;
}

int serve(const std::filesystem::path& results, const std::string& host, int port,
          const std::optional<std::filesystem::path>& ui, int cores);

}  // namespace cli
