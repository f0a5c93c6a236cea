#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <hillkrein/cli.hpp>

namespace {

std::optional<hillkrein::Complex> parse_center(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) return hillkrein::Complex(std::stod(s), 0.0);
    return hillkrein::Complex(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
  } catch (const std::exception&) {
    throw hillkrein::Error(hillkrein::ErrorCode::InvalidArgument, "--center expects RE,IM");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hill determinants and Krein trace formulas for S-periodic ODE systems"};
  app.require_subcommand(1);

  std::string problem_path, out_path, format = "json", center, formula;
  int m = 0;
  double cutoff = 0.0, radius = 0.0;
  long long seed = -1;

  const std::vector<std::string> commands = {"spectrum", "hill", "trace", "eigs", "krein", "converge"};
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c);
    sub->add_option("--problem", problem_path, "problem file (JSON)")->required();
    sub->add_option("--out", out_path, "write the report here instead of stdout");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--m", m, "trace power");
    sub->add_option("--cutoff", cutoff, "spectral cutoff");
    sub->add_option("--center", center, "contour center RE,IM");
    sub->add_option("--radius", radius, "contour radius");
    sub->add_option("--seed", seed, "overrides the problem seed");
    sub->add_option("--formula", formula, "resolvent, resolvent2, centered_square, full_square, scalar_boundary_square or krein");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::ifstream in(problem_path);
    if (!in) throw hillkrein::Error(hillkrein::ErrorCode::SchemaError, "cannot open " + problem_path);
    hillkrein::json j;
    try {
      in >> j;
    } catch (const hillkrein::json::exception& e) {
      throw hillkrein::Error(hillkrein::ErrorCode::SchemaError, e.what());
    }
    if (seed >= 0 && j.is_object()) j["seed"] = static_cast<std::uint64_t>(seed);
    const hillkrein::ProblemFile p = hillkrein::parse_problem(j);

    hillkrein::RunFlags flags;
    flags.format = format;
    if (m > 0) flags.m = m;
    if (cutoff > 0.0) flags.cutoff = cutoff;
    if (radius > 0.0) flags.radius = radius;
    flags.center = parse_center(center);
    flags.formula = formula;

    const hillkrein::RunReport rep = hillkrein::run(command, p, flags);
    const std::string text = format == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path);
      out << text;
    }
    for (const auto& c : rep.checks)
      if (!c.passed) std::cerr << "check failed: " << c.name << " (" << c.detail << ")\n";
    return rep.exit_code();
  } catch (const hillkrein::Error& e) {
    std::cerr << "error [" << hillkrein::to_string(e.code()) << "]: " << e.what() << "\n";
    return hillkrein::is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
