// awf: scenario runner.
//   awf <subcommand> <scenario.json> [-o DIR]
// Exit status: 0 when every gate passes, 2 on an inconclusive verdict, 1 otherwise.

#include "runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace awf;
  CLI::App app{"Analytic wave front set experiments"};
  app.require_subcommand(1);
  std::string config, out = "out";
  for (const std::string& name : cli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, name == "all" ? "run every stage" : "run the " + name + " stage");
    sub->add_option("config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "output directory")->capture_default_str();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const cli::RunConfig cfg = cli::load_config(config);
    const cli::RunResult res = cli::run(sub, cfg, out, std::cout);
    for (const cli::StageResult& st : res.stages)
      std::cout << st.name << ": " << cli::to_string(st.status) << " (" << st.seconds << " s)\n";
    return res.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
