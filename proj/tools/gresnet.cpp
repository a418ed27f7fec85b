// gresnet: command-line front end.
//
// Exit codes: 0 success, 1 I/O or validation error, 2 usage error,
// 3 verification failure, 4 training divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "gresnet/activations.hpp"
#include "gresnet/lmi.hpp"
#include "gresnet/network.hpp"
#include "gresnet/simd/kernels.hpp"
#include "gresnet/training.hpp"
#include "plots.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace gresnet;

namespace {

enum Exit : int { kOk = 0, kError = 1, kUsage = 2, kVerifyFailed = 3, kDiverged = 4 };

constexpr std::uint64_t kDefaultSeed = 42;

// Validation problems in user-supplied configs.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  if (j.contains("version") && j["version"] != 1) throw ConfigError(where + ": unsupported version");
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::string precise(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

void write_csv_rows(const fs::path& path, const std::string& header,
                    const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------

int cmd_constants(bool as_json) {
  const auto catalog = activation_catalog();
  if (as_json) {
    Json out = Json::array();
    for (const auto& a : catalog) {
      Json params = Json::object();
      for (const auto& [k, v] : a.params) params[k] = v;
      out.push_back(Json{{"name", a.name}, {"L", a.L}, {"m", a.m}, {"S", a.S}, {"P", a.P},
                         {"params", params}});
    }
    for (const auto& name : rejected_activation_names()) {
      out.push_back(Json{{"name", name}, {"L", "inf"}, {"m", "inf"}, {"S", "inf"}, {"P", "inf"}});
    }
    std::cout << out.dump(2) << '\n';
    return kOk;
  }
  std::cout << std::left << std::setw(14) << "activation" << std::right << std::setw(14) << "L"
            << std::setw(14) << "m" << std::setw(14) << "S" << std::setw(14) << "P" << '\n';
  for (const auto& a : catalog) {
    std::cout << std::left << std::setw(14) << a.name << std::right << std::setprecision(8)
              << std::setw(14) << a.L << std::setw(14) << a.m << std::setw(14) << a.S << std::setw(14)
              << a.P << '\n';
  }
  for (const auto& name : rejected_activation_names()) {
    std::cout << std::left << std::setw(14) << name << std::right;
    for (int i = 0; i < 4; ++i) std::cout << std::setw(14) << "inf";
    std::cout << '\n';
  }
  const auto notes = catalog_notes();
  if (!notes.empty()) {
    std::cout << "\nnotes:\n";
    for (const auto& n : notes) std::cout << "  " << n.name << ": " << n.text << '\n';
  }
  return kOk;
}

std::vector<ActivationSpec> parse_activations(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("'activations' must be a non-empty array");
  std::vector<ActivationSpec> out;
  for (const auto& a : j) {
    if (a.is_string()) {
      out.push_back(make_activation(a.get<std::string>()));
      continue;
    }
    reject_unknown(a, {"name", "params"}, "activation");
    ActivationParams params;
    if (a.contains("params")) {
      for (const auto& [k, v] : a["params"].items()) params[k] = v.get<double>();
    }
    out.push_back(make_activation(a.at("name").get<std::string>(), params));
  }
  return out;
}

int cmd_init(const fs::path& config_path, const fs::path& out_path, std::optional<std::uint64_t> seed) {
  const Json cfg = parse_json_file(config_path);
  reject_unknown(cfg, {"version", "d_x", "dims", "lipschitz", "blocks", "activations", "seed"}, "init config");
  BlockShape shape;
  shape.state_dim = get_or<std::size_t>(cfg, "d_x", 1);
  shape.dims = get_or<std::vector<std::size_t>>(cfg, "dims", {32, 1});
  const double lipschitz = get_or<double>(cfg, "lipschitz", 1.0);
  const auto blocks = get_or<std::size_t>(cfg, "blocks", 1);
  std::vector<ActivationSpec> acts;
  if (cfg.contains("activations")) {
    acts = parse_activations(cfg["activations"]);
  } else {
    acts.assign(shape.dims.size(), make_activation("relu"));
  }
  const std::uint64_t s = seed.value_or(get_or<std::uint64_t>(cfg, "seed", kDefaultSeed));
  const Model model = make_model(shape, blocks, lipschitz, acts, s);
  save_model(model, out_path);
  std::cout << "wrote " << out_path.string() << " (" << model.parameter_count() << " parameters, seed "
            << s << ")\n";
  return kOk;
}

int cmd_materialize(const fs::path& model_path, const fs::path& out_path) {
  const MaterializedModel mat = materialize(load_model(model_path));
  write_text_file(out_path, materialized_to_json(mat));
  std::cout << "wrote " << out_path.string() << '\n';
  return kOk;
}

struct VerifyOptions {
  fs::path model;
  fs::path raw_materialized;
  fs::path report;
  fs::path discs;
  fs::path eigs;
  fs::path svg_dir;
  std::size_t pairs = 10000;
  std::uint64_t seed = kDefaultSeed;
  std::optional<double> clip;
};

int cmd_verify(const VerifyOptions& opt) {
  if (opt.model.empty() == opt.raw_materialized.empty()) {
    throw CLI::ValidationError("verify", "exactly one of --model and --raw-materialized is required");
  }
  const MaterializedModel mat = opt.raw_materialized.empty()
                                    ? materialize(load_model(opt.model))
                                    : materialized_from_json(read_text_file(opt.raw_materialized));

  Json report;
  report["version"] = 1;
  report["simd"] = std::string(simd::active().name);
  report["lipschitz_total"] = mat.lipschitz_total;
  Json blocks = Json::array();
  bool pass = true;
  std::vector<GershgorinDisc> all_discs;
  std::vector<double> all_eigs;
  for (std::size_t k = 0; k < mat.blocks.size(); ++k) {
    const LmiReport r = verify_block(mat.blocks[k]);
    pass = pass && r.pass();
    Json checks = Json::array();
    for (const auto& c : r.checks) {
      checks.push_back(Json{{"name", c.name}, {"checked", c.checked}, {"violations", c.violations},
                            {"worst_excess", c.worst_excess}});
    }
    blocks.push_back(Json{{"block", k},
                          {"lmi_size", r.size},
                          {"lipschitz", mat.blocks[k].lipschitz},
                          {"max_disc_upper", r.max_disc_upper},
                          {"min_eigenvalue", r.min_eig},
                          {"max_eigenvalue", r.max_eig},
                          {"disc_pass", r.disc_pass},
                          {"eig_pass", r.eig_pass},
                          {"eig_converged", r.eig_converged},
                          {"constraints_pass", r.constraints_pass()},
                          {"nesting_fraction", r.nesting_fraction},
                          {"negative_g_entries", mat.blocks[k].negative_g_entries},
                          {"checks", checks},
                          {"pass", r.pass()}});
    const std::size_t offset = all_discs.size();  // rows run on across blocks
    for (auto d : r.discs) {
      d.row += offset;
      all_discs.push_back(d);
    }
    all_eigs.insert(all_eigs.end(), r.eigenvalues.begin(), r.eigenvalues.end());
  }
  report["blocks"] = blocks;

  if (opt.pairs > 0) {
    PairSampler sampler;
    sampler.pairs = opt.pairs;
    sampler.seed = opt.seed;
    const double estimate = empirical_lipschitz(mat, sampler);
    const bool ok = estimate <= mat.lipschitz_total * (1.0 + 1e-6);
    pass = pass && ok;
    report["empirical_lipschitz"] =
        Json{{"pairs", opt.pairs}, {"domain", {sampler.lo, sampler.hi}}, {"seed", opt.seed},
             {"estimate", estimate}, {"bound", mat.lipschitz_total}, {"pass", ok}};
  }
  report["pass"] = pass;
  write_text_file(opt.report, report.dump(2) + "\n");

  if (!opt.discs.empty()) {
    std::ostringstream out;
    write_discs_csv(out, all_discs);
    write_text_file(opt.discs, out.str());
  }
  if (!opt.eigs.empty()) {
    std::ostringstream out;
    write_eigenvalues_csv(out, all_eigs);
    write_text_file(opt.eigs, out.str());
    if (opt.clip) {
      std::ostringstream clipped;
      write_eigenvalues_csv(clipped, plots::clip_by_quartiles(all_eigs, *opt.clip));
      fs::path display = opt.eigs;
      display.replace_extension(".display.csv");
      write_text_file(display, clipped.str());
    }
  }
  if (!opt.svg_dir.empty()) {
    fs::create_directories(opt.svg_dir);
    write_text_file(opt.svg_dir / "discs.svg", plots::disc_chart("LMI Gershgorin discs", all_discs));
    const auto shown = opt.clip ? plots::clip_by_quartiles(all_eigs, *opt.clip) : all_eigs;
    write_text_file(opt.svg_dir / "eigenvalues.svg", plots::histogram("LMI eigenvalues", shown));
  }

  std::cout << (pass ? "PASS" : "FAIL") << ": " << mat.blocks.size() << " block(s)";
  if (report.contains("empirical_lipschitz")) {
    std::cout << ", empirical Lipschitz " << precise(report["empirical_lipschitz"]["estimate"].get<double>())
              << " <= " << mat.lipschitz_total;
  }
  std::cout << '\n';
  return pass ? kOk : kVerifyFailed;
}

struct TrainOptions {
  fs::path model;
  fs::path train;
  fs::path out;
  fs::path history;
  fs::path curve;
  fs::path summary;
  fs::path svg_dir;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainOptions& opt) {
  Model model = load_model(opt.model);
  const Json cfg = parse_json_file(opt.train);
  reject_unknown(cfg,
                 {"version", "optimizer", "lr", "epochs", "batch", "seed", "points", "amplitude",
                  "domain", "certify_every"},
                 "train config");
  OptimizerConfig oc;
  oc.name = get_or<std::string>(cfg, "optimizer", oc.name);
  oc.lr = get_or<double>(cfg, "lr", oc.lr);
  oc.epochs = get_or<std::size_t>(cfg, "epochs", oc.epochs);
  oc.batch = get_or<std::size_t>(cfg, "batch", oc.batch);
  oc.certify_every = get_or<std::size_t>(cfg, "certify_every", oc.certify_every);
  oc.seed = opt.seed.value_or(get_or<std::uint64_t>(cfg, "seed", kDefaultSeed));
  oc.validate();
  const auto points = get_or<std::size_t>(cfg, "points", 1024);
  const double amplitude = get_or<double>(cfg, "amplitude", 0.5);
  const double two_pi = 2.0 * std::numbers::pi;
  const auto domain = get_or<std::vector<double>>(cfg, "domain", {-two_pi, two_pi});
  if (domain.size() != 2 || !(domain[0] < domain[1])) throw ConfigError("'domain' must be [lo, hi] with lo < hi");
  if (model.state_dim() != 1) throw ConfigError("training on the sine task needs a model with d_x = 1");

  const Dataset data = make_sine_dataset(points, domain[0], domain[1], amplitude, oc.seed);
  const TrainingHistory h = train(model, data, oc);

  std::vector<std::vector<double>> rows;
  for (std::size_t e = 0; e < h.losses.size(); ++e) rows.push_back({static_cast<double>(e), h.losses[e]});
  write_csv_rows(opt.history, "epoch,loss", rows);
  if (h.diverged) {
    std::cerr << "error: training diverged: " << h.divergence_reason << '\n';
    return kDiverged;
  }
  save_model(model, opt.out);

  const MaterializedModel mat = materialize(model);
  constexpr std::size_t kGrid = 512;
  rows.clear();
  std::vector<double> gx, gy, gt;
  for (std::size_t i = 0; i < kGrid; ++i) {
    const double x = domain[0] + (domain[1] - domain[0]) * static_cast<double>(i) / (kGrid - 1);
    const double y = model_forward(mat, std::span<const double>(&x, 1))[0];
    rows.push_back({x, y, amplitude * std::sin(x)});
    gx.push_back(x);
    gy.push_back(y);
    gt.push_back(amplitude * std::sin(x));
  }
  write_csv_rows(opt.curve, "x,y_pred,y_target", rows);

  const LinearOracle oracle = linear_fit_oracle(domain[0], domain[1], amplitude);
  Json summary{{"version", 1},
               {"optimizer", h.optimizer},
               {"epochs", h.losses.size()},
               {"final_mse", h.final_mse},
               {"oracle", {{"slope", oracle.slope}, {"intercept", oracle.intercept}, {"loss", oracle.loss}}},
               {"mse_over_oracle", oracle.loss > 0.0 ? h.final_mse / oracle.loss : 0.0},
               {"collapse",
                {{"slope", h.collapse.slope},
                 {"intercept", h.collapse.intercept},
                 {"r2", h.collapse.r2},
                 {"max_residual", h.collapse.max_residual}}},
               {"certification", {{"checks", h.certification_checks}, {"failures", h.certification_failures}}}};
  std::cout << summary.dump(2) << '\n';
  if (!opt.summary.empty()) write_text_file(opt.summary, summary.dump(2) + "\n");

  if (!opt.svg_dir.empty()) {
    fs::create_directories(opt.svg_dir);
    std::vector<double> epochs(h.losses.size());
    for (std::size_t e = 0; e < epochs.size(); ++e) epochs[e] = static_cast<double>(e);
    write_text_file(opt.svg_dir / "loss.svg",
                    plots::line_chart("MSE training loss (" + h.optimizer + ")", "epoch", "MSE",
                                      {{h.optimizer, epochs, h.losses, false}}));
    write_text_file(opt.svg_dir / "curve.svg",
                    plots::line_chart("Network output", "x", "y",
                                      {{"target", gx, gt, false}, {"prediction", gx, gy, false}}));
  }
  return h.certification_failures == 0 ? kOk : kVerifyFailed;
}

std::vector<std::vector<double>> read_csv_vectors(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const char* begin = field.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == begin || *end != '\0') {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + field + "'");
      }
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": trailing comma");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_eval(const fs::path& model_path, const fs::path& inputs, const fs::path& out_path) {
  const MaterializedModel mat = materialize(load_model(model_path));
  const auto rows = read_csv_vectors(inputs);
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != mat.state_dim()) {
      throw ConfigError("input row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                        " values; the model expects " + std::to_string(mat.state_dim()));
    }
    const Vector y = model_forward(mat, rows[r]);
    for (std::size_t i = 0; i < y.size(); ++i) out << (i ? "," : "") << y[i];
    out << '\n';
  }
  write_text_file(out_path, out.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gershgorin-certified Lipschitz residual networks"};
  app.require_subcommand(1);

  auto* constants = app.add_subcommand("constants", "Print the activation slope constants");
  bool as_json = false;
  constants->add_flag("--json", as_json, "Emit a JSON array");

  auto* init = app.add_subcommand("init", "Create a randomly initialized model");
  fs::path init_config, init_out;
  std::optional<std::uint64_t> init_seed;
  init->add_option("--config", init_config, "Init config JSON")->required();
  init->add_option("--out", init_out, "Model file to write")->required();
  init->add_option("--seed", init_seed, "RNG seed (default 42)");

  auto* mat = app.add_subcommand("materialize", "Dump the constrained parameters of a model");
  fs::path mat_model, mat_out;
  mat->add_option("--model", mat_model)->required();
  mat->add_option("--out", mat_out)->required();

  auto* verify = app.add_subcommand("verify", "Certify every block of a model");
  VerifyOptions vopt;
  verify->add_option("--model", vopt.model, "Model file");
  verify->add_option("--raw-materialized", vopt.raw_materialized,
                     "Verify a materialized dump as-is instead of a model");
  verify->add_option("--report", vopt.report, "Report JSON to write")->required();
  verify->add_option("--discs", vopt.discs, "Disc CSV (row, center, radius)");
  verify->add_option("--eigs", vopt.eigs, "Eigenvalue CSV (index, eigenvalue)");
  verify->add_option("--pairs", vopt.pairs, "Random pairs for the empirical Lipschitz estimate (0 skips)");
  verify->add_option("--seed", vopt.seed, "RNG seed for the pairs (default 42)");
  verify->add_option("--svg", vopt.svg_dir, "Directory for SVG renderings");
  verify->add_option("--clip-quantile", vopt.clip,
                     "Also write a display copy of the eigenvalues clipped to this many quartile ranges");

  auto* trn = app.add_subcommand("train", "Train a model on the sine task");
  TrainOptions topt;
  trn->add_option("--model", topt.model)->required();
  trn->add_option("--train", topt.train, "Training config JSON")->required();
  trn->add_option("--out", topt.out, "Trained model file")->required();
  trn->add_option("--history", topt.history, "Loss history CSV")->required();
  trn->add_option("--curve", topt.curve, "Output curve CSV")->required();
  trn->add_option("--summary", topt.summary, "Summary JSON");
  trn->add_option("--svg", topt.svg_dir, "Directory for SVG renderings");
  trn->add_option("--seed", topt.seed, "Overrides the config seed");

  auto* eval = app.add_subcommand("eval", "Evaluate a model on CSV inputs");
  fs::path eval_model, eval_in, eval_out;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--inputs", eval_in)->required();
  eval->add_option("--out", eval_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*constants) return cmd_constants(as_json);
    if (*init) return cmd_init(init_config, init_out, init_seed);
    if (*mat) return cmd_materialize(mat_model, mat_out);
    if (*verify) return cmd_verify(vopt);
    if (*trn) return cmd_train(topt);
    if (*eval) return cmd_eval(eval_model, eval_in, eval_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kUsage;
}
