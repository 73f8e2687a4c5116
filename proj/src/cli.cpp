#include "herdval/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <json.hpp>

#include "herdval/experiments.hpp"
#include "herdval/io.hpp"
#include "herdval/sobol.hpp"
#include "herdval/testbed.hpp"

namespace herdval {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

double parse_theta(const std::string& text, Index design_size, int d) {
  if (text == "auto") {
    return std::pow(static_cast<double>(design_size), 1.0 / static_cast<double>(d));
  }
  const double v = std::stod(text);
  if (!(v > 0.0)) throw CLI::ValidationError("--theta", "theta must be positive or 'auto'");
  return v;
}

void write_sidecar(const std::string& out_path, const json& config, json results) {
  json doc;
  doc["tool"] = "herdval";
  doc["schema_version"] = 1;
  doc["config"] = config;
  doc["config_hash"] = hash_hex(config.dump());
  doc["results"] = std::move(results);
  std::ofstream f(out_path + ".json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + out_path + ".json");
  f << doc.dump(2) << "\n";
}

json events_json(const std::vector<SelectionEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) {
    arr.push_back({{"iteration", e.iteration},
                   {"candidate", e.candidate},
                   {"in_exclude", e.in_exclude},
                   {"duplicate", e.duplicate}});
  }
  return arr;
}

struct KernelChoice {
  std::string form = "isotropic";  // isotropic | product
  std::string cond = "none";       // none | kn | kbar
  std::string mu_mode = "auto";    // auto | sobol | closed
};

struct BuiltKernel {
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const Mu> mu;
  Points candidates;
};

BuiltKernel build_kernel_and_mu(const KernelChoice& choice, int d, double theta,
                                const Points& xn, Index q, std::uint64_t seed) {
  BuiltKernel out;
  out.candidates = SobolStream::generate(d, q, sub_seed(seed, 1));

  std::shared_ptr<const ProductMatern32> prod;
  std::shared_ptr<const Kernel> base;
  if (choice.form == "product") {
    prod = make_matern32_product(d, theta);
    base = prod;
  } else {
    base = make_matern32_isotropic(d, theta);
  }

  if (choice.cond == "kn") {
    out.kernel = make_conditional(base, xn);
  } else if (choice.cond == "kbar") {
    out.kernel = make_validation(base, xn);
  } else {
    out.kernel = base;
  }

  std::string mu_mode = choice.mu_mode;
  if (mu_mode == "auto") {
    const bool closed_available =
        choice.form == "product" && (choice.cond == "none" || choice.cond == "kbar");
    mu_mode = closed_available ? "closed" : "sobol";
  }
  if (mu_mode == "closed") {
    if (choice.form != "product") {
      throw CLI::ValidationError("--mu", "closed-form mu requires --kernel product");
    }
    if (choice.cond == "none") {
      out.mu = std::make_shared<UniformProductMu>(prod);
    } else if (choice.cond == "kbar") {
      out.mu = std::make_shared<UniformValidationMu>(
          std::static_pointer_cast<const ValidationKernel>(out.kernel));
    } else {
      throw CLI::ValidationError("--mu", "closed-form mu supports --cond none or kbar");
    }
  } else {
    out.mu = std::make_shared<DiscreteMu>(out.kernel, DiscreteMeasure::uniform(out.candidates));
  }
  return out;
}

// Weights aligned with the emitted design rows; repeated selections keep the
// mass on their first occurrence.
Vector design_weights_from_trace(const HerdingTrace& trace) {
  const Index m = trace.design.cols();
  Vector w = Vector::Zero(m);
  const Vector& final_w = trace.final_measure.weights;
  const Points& support = trace.final_measure.support;
  std::vector<bool> used(static_cast<std::size_t>(support.cols()), false);
  for (Index i = 0; i < m; ++i) {
    for (Index s = 0; s < support.cols(); ++s) {
      if (!used[static_cast<std::size_t>(s)] && support.col(s) == trace.design.col(i)) {
        w[i] = final_w[s];
        used[static_cast<std::size_t>(s)] = true;
        break;
      }
    }
  }
  return w;
}

int cmd_design(const std::vector<std::string>& args);
int cmd_weights(const std::vector<std::string>& args);
int cmd_criteria(const std::vector<std::string>& args);
int cmd_metrics(const std::vector<std::string>& args);
int cmd_experiment_delta(const std::vector<std::string>& args);
int cmd_experiment_ise(const std::vector<std::string>& args);
int cmd_theorem1(const std::vector<std::string>& args);

int parse_and_run(CLI::App& app, const std::vector<std::string>& args,
                  const std::function<int()>& body) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return body();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_design(const std::vector<std::string>& args) {
  CLI::App app{"generate a design by kernel herding or a minimum-norm variant"};
  int d = 0;
  Index n = 0;
  Index q = 4096;
  std::string theta_text = "auto";
  KernelChoice choice;
  std::string variant = "kh";
  std::string xn_file, init_file, out;
  bool distinct = false;
  Index cap_multiplier = 50;
  std::uint64_t seed = 0;
  app.add_option("--d", d, "dimension")->required();
  app.add_option("--n", n, "number of points to generate")->required();
  app.add_option("--q", q, "candidate set size");
  app.add_option("--theta", theta_text, "Matern parameter or 'auto' (n^{1/d})");
  app.add_option("--kernel", choice.form, "isotropic|product")
      ->check(CLI::IsMember({"isotropic", "product"}));
  app.add_option("--cond", choice.cond, "none|kn|kbar")
      ->check(CLI::IsMember({"none", "kn", "kbar"}));
  app.add_option("--mu", choice.mu_mode, "auto|sobol|closed")
      ->check(CLI::IsMember({"auto", "sobol", "closed"}));
  app.add_option("--variant", variant, "kh|mn|mn2|kh-exclude")
      ->check(CLI::IsMember({"kh", "mn", "mn2", "kh-exclude"}));
  app.add_option("--xn-file", xn_file, "conditioning/exclusion design CSV");
  app.add_option("--init-file", init_file, "initial design CSV");
  app.add_flag("--distinct", distinct, "kh-exclude: require distinct points");
  app.add_option("--cap", cap_multiplier, "kh-exclude iteration cap multiplier");
  app.add_option("--seed", seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    Points xn(d, 0);
    if (!xn_file.empty()) xn = read_design(xn_file).points;
    if ((choice.cond != "none" || variant == "kh-exclude") && xn.cols() == 0) {
      throw std::runtime_error("--xn-file is required for --cond kn/kbar and kh-exclude");
    }
    const double theta =
        parse_theta(theta_text, xn.cols() > 0 ? xn.cols() : std::max<Index>(n, 1), d);
    BuiltKernel built = build_kernel_and_mu(choice, d, theta, xn, q, seed);

    HerdingConfig cfg;
    cfg.kernel = built.kernel;
    cfg.mu = built.mu;
    cfg.candidates = built.candidates;
    cfg.count = n;
    cfg.distinct = distinct;
    cfg.max_iterations = cap_multiplier * std::max<Index>(n, 1);
    if (!init_file.empty()) cfg.initial = read_design(init_file).points;
    if (variant == "kh-exclude") cfg.exclude = xn;
    cfg.variant = variant == "kh"        ? HerdingVariant::kh
                  : variant == "mn"      ? HerdingVariant::mn
                  : variant == "mn2"     ? HerdingVariant::mn2
                                         : HerdingVariant::kh_exclude;

    const HerdingTrace trace = run_herding(cfg);

    if (cfg.variant == HerdingVariant::kh) {
      write_design(out, trace.design);
    } else if (cfg.variant == HerdingVariant::kh_exclude) {
      write_design(out, trace.design, &trace.design_weights);
    } else {
      const Vector w = design_weights_from_trace(trace);
      write_design(out, trace.design, &w);
    }

    json config{{"command", "design"}, {"d", d},           {"n", n},
                {"q", q},              {"theta", theta},   {"kernel", choice.form},
                {"cond", choice.cond}, {"mu", choice.mu_mode}, {"variant", variant},
                {"xn_file", xn_file},  {"init_file", init_file}, {"distinct", distinct},
                {"cap", cap_multiplier}, {"seed", seed}};
    json results;
    results["iterations"] = trace.iterations;
    results["design_size"] = trace.design.cols();
    results["mmd2"] = trace.mmd2;
    results["total_mass"] = trace.total_mass;
    results["events"] = events_json(trace.events);
    write_sidecar(out, config, std::move(results));
    return 0;
  });
}

int cmd_weights(const std::vector<std::string>& args) {
  CLI::App app{"compute validation weights for an existing design"};
  std::string design_file, xn_file, out;
  KernelChoice choice;
  choice.form = "product";
  choice.cond = "kbar";
  std::string theta_text = "auto";
  std::string solver = "free";
  Index q = 4096;
  std::uint64_t seed = 0;
  app.add_option("--design-file", design_file, "design CSV")->required();
  app.add_option("--xn-file", xn_file, "prediction design CSV")->required();
  app.add_option("--kernel", choice.form, "isotropic|product")
      ->check(CLI::IsMember({"isotropic", "product"}));
  app.add_option("--cond", choice.cond, "kn|kbar")->check(CLI::IsMember({"kn", "kbar"}));
  app.add_option("--mu", choice.mu_mode, "auto|sobol|closed")
      ->check(CLI::IsMember({"auto", "sobol", "closed"}));
  app.add_option("--theta", theta_text, "Matern parameter or 'auto'");
  app.add_option("--weights", solver, "free|sum1")->check(CLI::IsMember({"free", "sum1"}));
  app.add_option("--q", q, "discrete mu size");
  app.add_option("--seed", seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    const Points z = read_design(design_file).points;
    const Points xn = read_design(xn_file).points;
    const int d = static_cast<int>(z.rows());
    if (xn.rows() != d) throw std::runtime_error("design and xn dimension mismatch");
    const double theta = parse_theta(theta_text, xn.cols(), d);
    BuiltKernel built = build_kernel_and_mu(choice, d, theta, xn, q, seed);

    Vector w;
    Vector pruned_flags = Vector::Zero(z.cols());
    double total_mass = 0.0;
    if (solver == "free") {
      const FreeWeights fw = optimal_weights_free(z, *built.mu);
      w = fw.weights;
      for (Index i : fw.pruned) pruned_flags[i] = 1.0;
      total_mass = fw.total_mass();
    } else {
      w = optimal_weights_sum1(z, *built.mu);
      total_mass = w.sum();
    }
    write_design(out, z, &w, &pruned_flags);

    json config{{"command", "weights"},   {"design_file", design_file},
                {"xn_file", xn_file},     {"kernel", choice.form},
                {"cond", choice.cond},    {"mu", choice.mu_mode},
                {"theta", theta},         {"weights", solver},
                {"q", q},                 {"seed", seed}};
    json results;
    results["total_mass"] = total_mass;
    results["pruned"] = static_cast<int>(pruned_flags.sum());
    write_sidecar(out, config, std::move(results));
    return 0;
  });
}

int cmd_criteria(const std::vector<std::string>& args) {
  CLI::App app{"evaluate validation criteria for a design"};
  std::string design_file, xn_file, out;
  std::string theta_text = "auto";
  std::string kernel_form = "isotropic";
  Index q = 4096;
  Index q_ref = Index{1} << 16;
  std::uint64_t seed = 0;
  app.add_option("--design-file", design_file, "design CSV (optional w column)")->required();
  app.add_option("--xn-file", xn_file, "prediction design CSV")->required();
  app.add_option("--kernel", kernel_form, "isotropic|product")
      ->check(CLI::IsMember({"isotropic", "product"}));
  app.add_option("--theta", theta_text, "Matern parameter or 'auto'");
  app.add_option("--q", q, "mu_Q size");
  app.add_option("--q-ref", q_ref, "reference/probe set size");
  app.add_option("--seed", seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    const DesignFile df = read_design(design_file);
    const Points xn = read_design(xn_file).points;
    const int d = static_cast<int>(df.points.rows());
    if (xn.rows() != d) throw std::runtime_error("design and xn dimension mismatch");
    const double theta = parse_theta(theta_text, xn.cols(), d);

    std::shared_ptr<const Kernel> base =
        kernel_form == "product"
            ? std::shared_ptr<const Kernel>(make_matern32_product(d, theta))
            : make_matern32_isotropic(d, theta);
    auto kbar = make_validation(base, xn);
    const Points mu_pts = SobolStream::generate(d, q, sub_seed(seed, 1));
    DiscreteMu mu_bar(kbar, DiscreteMeasure::uniform(mu_pts));

    const Points ref_pts = SobolStream::generate(d, q_ref, sub_seed(seed, 3));
    const double imse_ref = imse_hat(kbar->conditional(), ref_pts);
    Points probes(d, q_ref + factorial_grid3(d).cols());
    probes << SobolStream::generate(d, q_ref, sub_seed(seed, 4)), factorial_grid3(d);

    const bool weighted = df.weights.has_value();
    DiscreteMeasure zeta = weighted ? DiscreteMeasure{df.points, *df.weights}
                                    : DiscreteMeasure::uniform(df.points);
    const Vector* w = weighted ? &*df.weights : nullptr;
    const CriteriaRow row = compute_criteria("design", weighted, zeta, df.points, w, mu_bar,
                                             kbar->conditional(), imse_ref, probes);

    CsvTable t;
    t.kind = "criteria";
    t.columns = {"design",  "weighted", "delta_bar", "delta",      "cr",
                 "pr",      "cr_renorm", "pr_renorm", "total_mass", "mmd_clamped"};
    t.add_row({row.design, row.weighted ? "1" : "0", format_double(row.delta_bar),
               format_double(row.delta), format_double(row.cr), format_double(row.pr),
               format_double(row.cr_renormalized), format_double(row.pr_renormalized),
               format_double(row.total_mass), row.mmd_clamped ? "1" : "0"});
    t.write(out);

    json config{{"command", "criteria"}, {"design_file", design_file},
                {"xn_file", xn_file},    {"kernel", kernel_form},
                {"theta", theta},        {"q", q},
                {"q_ref", q_ref},        {"seed", seed}};
    json results;
    results["imse_ref"] = imse_ref;
    results["delta_bar"] = row.delta_bar;
    results["delta"] = row.delta;
    write_sidecar(out, config, std::move(results));
    return 0;
  });
}

int cmd_metrics(const std::vector<std::string>& args) {
  CLI::App app{"space-filling metrics for a design"};
  std::string design_file, out;
  int probe_exp = 16;
  std::uint64_t seed = 0;
  app.add_option("--design-file", design_file, "design CSV")->required();
  app.add_option("--probe-exp", probe_exp, "log2 of the Sobol probe count");
  app.add_option("--seed", seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    const Points z = read_design(design_file).points;
    const int d = static_cast<int>(z.rows());
    const Index q = Index{1} << probe_exp;
    Points probes(d, q + factorial_grid3(d).cols());
    probes << SobolStream::generate(d, q, sub_seed(seed, 4)), factorial_grid3(d);
    const SpaceFillingReport r = space_filling_report(z, probes);

    CsvTable t;
    t.kind = "metrics";
    t.columns = {"cr", "pr", "cr_renorm", "pr_renorm", "probes"};
    t.add_row({format_double(r.cr), format_double(r.pr), format_double(r.cr_renormalized),
               format_double(r.pr_renormalized), std::to_string(r.probes_used)});
    t.write(out);

    json config{{"command", "metrics"},
                {"design_file", design_file},
                {"probe_exp", probe_exp},
                {"seed", seed}};
    write_sidecar(out, config, json::object());
    return 0;
  });
}

int cmd_experiment_delta(const std::vector<std::string>& args) {
  CLI::App app{"criterion and space-filling comparison of validation designs"};
  DeltaExperimentConfig cfg;
  std::string out;
  app.add_option("--d", cfg.d, "dimension");
  app.add_option("--n", cfg.n, "prediction design size");
  app.add_option("--m", cfg.m, "validation design size");
  app.add_option("--q", cfg.q, "candidate set size");
  app.add_option("--q-ref", cfg.q_ref, "reference/probe set size");
  app.add_option("--theta", cfg.theta, "Matern parameter (0 = auto)");
  app.add_option("--seed", cfg.seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    const DeltaExperimentResult res = run_delta_experiment(cfg);
    CsvTable t;
    t.kind = "experiment-delta";
    t.columns = {"design",  "weighted", "delta_bar", "delta",      "cr",
                 "pr",      "cr_renorm", "pr_renorm", "total_mass", "mmd_clamped"};
    for (const auto& row : res.rows) {
      t.add_row({row.design, row.weighted ? "1" : "0", format_double(row.delta_bar),
                 format_double(row.delta), format_double(row.cr), format_double(row.pr),
                 format_double(row.cr_renormalized), format_double(row.pr_renormalized),
                 format_double(row.total_mass), row.mmd_clamped ? "1" : "0"});
    }
    t.write(out);

    json config{{"command", "experiment-delta"},
                {"d", cfg.d},
                {"n", cfg.n},
                {"m", cfg.m},
                {"q", cfg.q},
                {"q_ref", cfg.q_ref},
                {"theta", cfg.theta},
                {"seed", cfg.seed}};
    json results;
    results["imse_ref"] = res.imse_ref;
    write_sidecar(out, config, std::move(results));
    return 0;
  });
}

int cmd_experiment_ise(const std::vector<std::string>& args) {
  CLI::App app{"relative ISE estimation error with random polynomial truths"};
  IseExperimentConfig cfg;
  std::string out;
  app.add_option("--d", cfg.dims, "dimensions (repeatable)");
  app.add_option("--n", cfg.n, "prediction design size");
  app.add_option("--m", cfg.m, "validation design size");
  app.add_option("--q", cfg.q, "KH candidate set size");
  app.add_option("--q-ref", cfg.q_ref, "ISE reference size");
  app.add_option("--reps", cfg.replicates, "replicates per dimension");
  app.add_option("--seed", cfg.seed, "seed");
  app.add_option("--out", out, "output CSV path")->required();

  return parse_and_run(app, args, [&]() -> int {
    const IseExperimentResult res = run_ise_experiment(cfg);
    CsvTable t;
    t.kind = "experiment-ise";
    t.columns = {"d", "replicate", "method", "weighted", "ise_ref", "ise_hat", "rho"};
    for (const auto& row : res.rows) {
      t.add_row({std::to_string(row.d), std::to_string(row.replicate), row.method,
                 row.weighted ? "1" : "0", format_double(row.ise_ref),
                 format_double(row.ise_hat),
                 row.rho_defined ? format_double(row.rho) : "nan"});
    }
    t.write(out);

    json config{{"command", "experiment-ise"},
                {"d", cfg.dims},
                {"n", cfg.n},
                {"m", cfg.m},
                {"q", cfg.q},
                {"q_ref", cfg.q_ref},
                {"reps", cfg.replicates},
                {"seed", cfg.seed}};
    json results;
    results["failures"] = res.failures;
    results["failure_log"] = res.failure_log;
    json aggs = json::array();
    for (const auto& a : res.aggregates) {
      aggs.push_back({{"d", a.d},
                      {"method", a.method},
                      {"weighted", a.weighted},
                      {"mean_abs_rho", a.mean_abs_rho},
                      {"mean_rho", a.mean_rho},
                      {"count", a.count}});
    }
    results["aggregates"] = std::move(aggs);
    write_sidecar(out, config, std::move(results));
    return 0;
  });
}

int cmd_theorem1(const std::vector<std::string>& args) {
  CLI::App app{"check that the two minimum-norm pathways select the same sequence"};
  Index n = 4;
  Index k = 8;
  double theta = 10.0;
  Index q = 256;
  std::uint64_t seed = 0;
  app.add_option("--n", n, "conditioning design size");
  app.add_option("--k", k, "iterations");
  app.add_option("--theta", theta, "Matern parameter");
  app.add_option("--q", q, "candidate set size");
  app.add_option("--seed", seed, "seed");

  return parse_and_run(app, args, [&]() -> int {
    const Theorem1Result res = run_theorem1_check(n, k, theta, q, seed);
    std::cout << "direct:     ";
    for (Index i : res.seq_direct) std::cout << i << " ";
    std::cout << "\nconditional: ";
    for (Index i : res.seq_cond) std::cout << i << " ";
    std::cout << "\nequal: " << (res.equal ? "yes" : "no") << "\n";
    return res.equal ? 0 : 1;
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    std::cout << "usage: herdval <command> [options]\n"
                 "commands:\n"
                 "  design            generate a design (kh, mn, mn2, kh-exclude)\n"
                 "  weights           validation weights for an existing design\n"
                 "  criteria          criterion report for a design\n"
                 "  metrics           covering/packing radii\n"
                 "  experiment-delta  design comparison suite\n"
                 "  experiment-ise    ISE estimation error suite\n"
                 "  theorem1-check    minimum-norm pathway equivalence\n";
    return args.empty() ? 1 : 0;
  }
  const std::string cmd = args[0];
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (cmd == "design") return cmd_design(rest);
  if (cmd == "weights") return cmd_weights(rest);
  if (cmd == "criteria") return cmd_criteria(rest);
  if (cmd == "metrics") return cmd_metrics(rest);
  if (cmd == "experiment-delta") return cmd_experiment_delta(rest);
  if (cmd == "experiment-ise") return cmd_experiment_ise(rest);
  if (cmd == "theorem1-check") return cmd_theorem1(rest);
  std::cerr << "unknown command: " << cmd << "\n";
  return 1;
}

}  // namespace herdval
