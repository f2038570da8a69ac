#include <cstdlib>
#include <string>

#include "CLI11.hpp"

#include "kcone/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cone-surface verification suites and Kahler-Einstein solver"};
  std::string config;
  std::string outdir;
  app.add_option("config", config, "JSON config file")->required();
  app.add_option("-o,--output-dir", outdir,
                 "override the config's output_dir (also: KCONE_OUTPUT_DIR)");
  CLI11_PARSE(app, argc, argv);
  if (outdir.empty())
    if (const char* env = std::getenv("KCONE_OUTPUT_DIR")) outdir = env;
  return kcone::run_config_file(config, outdir);
}
