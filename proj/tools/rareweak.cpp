#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rareweak/experiments.hpp"

namespace fs = std::filesystem;
using rareweak::harness::json;

namespace {

std::size_t thread_count(std::optional<std::size_t> flag) {
  if (flag) return std::max<std::size_t>(1, *flag);
  if (const char* env = std::getenv("RAREWEAK_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw rareweak::ConfigError(std::string("RAREWEAK_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rareweak::ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw rareweak::ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare/Weak signal experiments"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scale;
  std::string out_dir = ".";
  std::optional<std::size_t> threads;
  for (const auto& kind : rareweak::harness::experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--scale", scale, "parameter preset")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: RAREWEAK_THREADS or 1)");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    const auto rc = rareweak::harness::resolve(kind, load_config(config_path), scale, seed);
    const std::size_t nthreads = thread_count(threads);
    fs::create_directories(out_dir);
    const std::string header = rareweak::harness::provenance_header(rc);
    for (const auto& file : rareweak::harness::run(rc, nthreads)) {
      const fs::path path = fs::path(out_dir) / file.name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw rareweak::ConfigError("cannot write '" + path.string() + "'");
      out << header << file.body;
      std::cout << path.string() << '\n';
    }
  } catch (const rareweak::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
