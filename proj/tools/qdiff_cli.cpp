#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qdiff/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qdiff: quasi-derivative boundary-value and spectral problems"};
  std::string config, action, out;
  app.add_option("--config,config", config, "TOML run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--action", action, "assemble | solve | spectrum | verify (overrides the config)")
      ->check(CLI::IsMember({"assemble", "solve", "spectrum", "verify"}));
  app.add_option("--out", out, "output directory (overrides the config)");
  CLI11_PARSE(app, argc, argv);

  try {
    qdiff::cli::RunConfig cfg = qdiff::cli::load_config(config);
    if (!action.empty()) cfg.action = *qdiff::cli::parse_action(action);
    if (!out.empty()) cfg.out = out;
    return qdiff::cli::run(cfg, std::cout);
  } catch (const qdiff::ParseError& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return 2;
  } catch (const qdiff::SpecError& e) {
    std::cerr << "specification error: " << e.what() << "\n";
    return 2;
  } catch (const qdiff::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
