#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "pvcm/pvcm.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace pvcm::cli {

namespace {

struct NotConverged {};

struct SolverFlags {
  double lambda = 1.0;
  std::optional<double> beta;
  std::optional<double> xi_p;
  double rank_tol = kDefaultRankTolerance;
  int max_iters = 20000;
  double tol = 1e-7;
  double split_tol = 1e-6;
  int threads = 1;
  bool exact_k = false;
  int trace_every = 1;
};

struct InputFlags {
  std::string dict;
  std::string data;
  std::string mask;
};

void add_inputs(CLI::App* app, InputFlags& in, bool mask_required) {
  app->add_option("--dict", in.dict, "Dictionary sidecar (.json) written by make-dict or phantom")
      ->required();
  app->add_option("--data", in.data, "Measurement stack, P x N array")->required();
  auto* mask = app->add_option("--mask", in.mask, "Voxel mask array; nonzero entries are voxels");
  if (mask_required) mask->required();
}

void add_solver_flags(CLI::App* app, SolverFlags& s) {
  app->add_option("--lambda", s.lambda, "Spatial smoothness weight")->capture_default_str();
  app->add_option("--beta", s.beta, "Penalty parameter (default sigma_1^2 / 10)");
  app->add_option("--xi-p", s.xi_p, "LADMM step parameter (default 0.75 lambda ||D^T D|| + 1e-10)");
  app->add_option("--rank-tol", s.rank_tol, "Relative Frobenius tolerance for SVD truncation")
      ->capture_default_str();
  app->add_option("--max-iters", s.max_iters, "Iteration cap")->capture_default_str();
  app->add_option("--tol", s.tol, "Relative-change stopping threshold")->capture_default_str();
  app->add_option("--split-tol", s.split_tol, "Split-residual stopping threshold")
      ->capture_default_str();
  app->add_option("--threads", s.threads, "Worker threads")->capture_default_str();
  app->add_flag("--exact-k", s.exact_k, "Use the dense (K^T K + beta I)^-1 instead of the truncated SVD");
  app->add_option("--trace-every", s.trace_every, "Iterations between trace samples (0 = off)")
      ->capture_default_str();
}

SolverConfig make_config(const SolverFlags& s) {
  SolverConfig c;
  c.beta = s.beta;
  c.xi_p = s.xi_p;
  c.max_iters = s.max_iters;
  c.rel_change_tol = s.tol;
  c.split_residual_tol = s.split_tol;
  c.trace_every = s.trace_every;
  c.threads = s.threads;
  c.exact_k = s.exact_k;
  return c;
}

// Resolved values of every option of a subcommand, as strings.
ordered_json option_values(const CLI::App* app) {
  ordered_json out = ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      out[name] = results.size() == 1 ? ordered_json(results.front()) : ordered_json(results);
    } else {
      out[name] = opt->get_default_str();
    }
  }
  return out;
}

ordered_json config_json(const SolverConfig& c) {
  ordered_json j;
  j["beta"] = c.beta ? ordered_json(*c.beta) : ordered_json(nullptr);
  j["xi_p"] = c.xi_p ? ordered_json(*c.xi_p) : ordered_json(nullptr);
  j["max_iters"] = c.max_iters;
  j["rel_change_tol"] = c.rel_change_tol;
  j["split_residual_tol"] = c.split_residual_tol;
  j["trace_every"] = c.trace_every;
  j["exact_k"] = c.exact_k;
  j["cg_tol"] = c.cg_tol;
  j["cg_max_iters"] = c.cg_max_iters;
  return j;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("no such file: " + path);
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
  return fs::path(dir);
}

struct LoadedProblem {
  Dictionary dict;
  MeasuredStack data;
  SpatialGraph graph;
  NdArray mask;
};

NdArray all_voxels(Eigen::Index n) {
  return NdArray({static_cast<std::size_t>(n)}, std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

LoadedProblem load_problem(const InputFlags& in, Manifest& manifest) {
  require_file(in.dict);
  require_file(in.data);
  manifest.add_input("dictionary", in.dict);
  manifest.add_input("data", in.data);
  Dictionary dict = load_dictionary(in.dict);
  {
    const auto sidecar = ordered_json::parse(std::ifstream(in.dict), nullptr, false);
    if (!sidecar.is_discarded() && sidecar.contains("matrix")) {
      manifest.add_input("dictionary_matrix",
                         fs::path(in.dict).parent_path() / sidecar["matrix"].get<std::string>());
    }
  }
  MeasuredStack data(read_array(in.data).to_matrix());
  if (data.measurements() != dict.measurements()) {
    throw FormatError("data has " + std::to_string(data.measurements()) +
                      " rows but the dictionary has P = " + std::to_string(dict.measurements()));
  }
  NdArray mask;
  if (!in.mask.empty()) {
    require_file(in.mask);
    manifest.add_input("mask", in.mask);
    mask = read_array(in.mask);
  } else {
    mask = all_voxels(data.voxels());
  }
  SpatialGraph graph = in.mask.empty() ? SpatialGraph(data.voxels(), {}) : build_spatial_graph(mask);
  if (graph.voxels() != data.voxels()) {
    throw FormatError("mask selects " + std::to_string(graph.voxels()) + " voxels but data has " +
                      std::to_string(data.voxels()) + " columns");
  }
  return LoadedProblem{std::move(dict), std::move(data), std::move(graph), std::move(mask)};
}

ordered_json result_json(const std::string& algorithm, const SolveResult& r, const Problem& p) {
  const CostBreakdown c = cost(p, r.f.values);
  ordered_json j;
  j["algorithm"] = algorithm;
  j["iterations"] = r.iterations;
  j["termination"] = std::string(to_string(r.termination));
  j["lambda"] = p.lambda;
  j["beta"] = r.beta;
  j["xi_p"] = r.xi_p;
  j["rank"] = p.lrd.rank();
  j["truncation_error"] = p.lrd.frobenius_error();
  j["split_residual"] = r.split_residual;
  j["rel_change"] = r.rel_change;
  j["state_vector_count"] = r.state_vector_count;
  j["workspace_vector_count"] = r.workspace_vector_count;
  j["cost"] = {{"data_term", c.data_term}, {"penalty_term", c.penalty_term}, {"total", c.total}};
  return j;
}

// ---------------------------------------------------------------- make-dict

struct MakeDictFlags {
  std::string preset;
  std::string kernel;
  std::string schedule;
  std::vector<std::string> axes;
  std::string matrix;
  double rank_tol = kDefaultRankTolerance;
  std::string out;
};

Spacing parse_spacing(const std::string& s) {
  if (s == "log") return Spacing::logarithmic;
  if (s == "lin") return Spacing::linear;
  throw InvalidArgument("axis spacing must be 'lin' or 'log', got '" + s + "'");
}

AxisSpec parse_axis(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4) {
    throw InvalidArgument("axis must be min:max:count[:lin|log], got '" + text + "'");
  }
  try {
    AxisSpec a;
    a.min = std::stod(parts[0]);
    a.max = std::stod(parts[1]);
    a.count = static_cast<std::size_t>(std::stoul(parts[2]));
    a.spacing = parts.size() == 4 ? parse_spacing(parts[3]) : Spacing::linear;
    return a;
  } catch (const std::logic_error&) {
    throw InvalidArgument("axis must be min:max:count[:lin|log], got '" + text + "'");
  }
}

Eigen::MatrixXd read_schedule_csv(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": ragged schedule row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": empty schedule");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

PhantomPreset named_preset(const std::string& name, std::size_t side, std::uint64_t seed) {
  if (name == "standard") return standard_phantom(seed);
  if (name == "diffusion") return diffusion_phantom(side, seed);
  throw InvalidArgument("unknown preset '" + name + "' (expected standard or diffusion)");
}

int cmd_make_dict(const MakeDictFlags& f, Manifest& manifest) {
  Dictionary dict = [&] {
    const int sources = !f.preset.empty() + !f.kernel.empty() + !f.matrix.empty();
    if (sources != 1) throw InvalidArgument("give exactly one of --preset, --kernel or --matrix");
    if (!f.preset.empty()) return named_preset(f.preset, 32, 1).dictionary();
    if (!f.matrix.empty()) {
      require_file(f.matrix);
      manifest.add_input("matrix", f.matrix);
      return Dictionary::from_matrix(read_array(f.matrix).to_matrix());
    }
    if (f.schedule.empty() || f.axes.empty()) {
      throw InvalidArgument("--kernel needs --schedule and at least one --axis");
    }
    manifest.add_input("schedule", f.schedule);
    AcquisitionSchedule sched;
    sched.kernel = kernel_from_string(f.kernel);
    sched.entries = read_schedule_csv(f.schedule);
    std::vector<AxisSpec> axes;
    for (const auto& a : f.axes) axes.push_back(parse_axis(a));
    return build_dictionary(sched, build_grid(axes));
  }();
  const fs::path out = prepare_out(f.out);
  save_dictionary(dict, out);
  const LowRankDictionary lrd = truncate_dictionary(dict, f.rank_tol);
  ordered_json info;
  info["measurements"] = dict.measurements();
  info["spectral_size"] = dict.spectral_size();
  info["rank"] = lrd.rank();
  info["truncation_error"] = lrd.frobenius_error();
  info["singular_values"] = std::vector<double>(lrd.singular_values().begin(), lrd.singular_values().end());
  write_json(out / "svd.json", info);
  manifest.write(out, 1);
  std::cout << "P = " << dict.measurements() << ", Q = " << dict.spectral_size()
            << ", rank " << lrd.rank() << " at tolerance " << f.rank_tol << '\n';
  return kOk;
}

// ---------------------------------------------------------------- phantom

struct PhantomFlags {
  std::string preset = "standard";
  std::size_t side = 32;
  std::uint64_t seed = 1;
  std::optional<double> sigma;
  std::string out;
};

ordered_json phantom_json(const PhantomPreset& p) {
  ordered_json j;
  j["rng"] = std::string(NormalRng::kName);
  j["seed"] = p.spec.seed;
  j["noise_sigma"] = p.spec.noise_sigma;
  j["image_shape"] = p.spec.image_shape;
  j["suggested_lambda"] = p.lambda;
  ordered_json comps = ordered_json::array();
  for (const auto& c : p.spec.compartments) {
    comps.push_back({{"center", c.center},
                     {"width", c.width},
                     {"region_begin", c.region.begin},
                     {"region_end", c.region.end},
                     {"amplitude", c.amplitude}});
  }
  j["compartments"] = comps;
  j["layout"] = "data is P x N and f_true is Q x N with voxels in mask order";
  return j;
}

int cmd_phantom(const PhantomFlags& f, Manifest& manifest) {
  PhantomPreset preset = named_preset(f.preset, f.side, f.seed);
  if (f.sigma) preset.spec.noise_sigma = *f.sigma;
  const Dictionary dict = preset.dictionary();
  const NdArray mask = preset.mask();
  const SpatialGraph graph = build_spatial_graph(mask);
  const Phantom ph = generate_phantom(preset.spec, dict, graph);

  const fs::path out = prepare_out(f.out);
  save_dictionary(dict, out);
  write_array(out / "mask.sspm", mask);
  write_array(out / "data.sspm", NdArray::from_matrix(ph.data.values()));
  write_array(out / "f_true.sspm", NdArray::from_matrix(ph.f_true.values));
  write_json(out / "phantom.json", phantom_json(preset));
  manifest.extra("seed") = f.seed;
  manifest.extra("rng") = std::string(NormalRng::kName);
  manifest.write(out, 1);
  std::cout << "wrote " << f.preset << " phantom: P = " << dict.measurements()
            << ", Q = " << dict.spectral_size() << ", N = " << graph.voxels() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveFlags {
  std::string algorithm = "ladmm";
  InputFlags in;
  SolverFlags solver;
  double tikhonov = 0.0;
  std::string out;
};

int cmd_solve(const SolveFlags& f, Manifest& manifest) {
  const LoadedProblem lp = load_problem(f.in, manifest);
  const fs::path out = prepare_out(f.out);
  const SolverConfig config = make_config(f.solver);
  manifest.extra("solver") = config_json(config);
  manifest.extra("algorithm") = f.algorithm;

  if (f.algorithm == "nnls") {
    const SpectroscopicImage est = solve_nnls_voxelwise(lp.dict, lp.data, f.tikhonov, f.solver.threads);
    write_array(out / "f.sspm", NdArray::from_matrix(est.values));
    ordered_json j;
    j["algorithm"] = "nnls";
    j["tikhonov"] = f.tikhonov;
    write_json(out / "result.json", j);
    manifest.write(out, f.solver.threads);
    return kOk;
  }
  if (f.in.mask.empty()) throw InvalidArgument("--mask is required for ladmm and admm");

  const LowRankDictionary lrd = truncate_dictionary(lp.dict, f.solver.rank_tol);
  const Problem problem{lp.data, lp.dict, lrd, lp.graph, f.solver.lambda};
  const SolveResult r = f.algorithm == "admm" ? solve_admm(problem, config) : solve_ladmm(problem, config);
  write_array(out / "f.sspm", NdArray::from_matrix(r.f.values));
  write_trace_csv(out / "trace.csv", r.trace);
  write_json(out / "result.json", result_json(f.algorithm, r, problem));
  manifest.write(out, f.solver.threads);
  std::cout << f.algorithm << ": " << r.iterations << " iterations, stopped by "
            << to_string(r.termination) << ", cost " << cost(problem, r.f.values).total << '\n';
  if (r.termination == Termination::max_iters) throw NotConverged{};
  return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareFlags {
  InputFlags in;
  SolverFlags solver;
  int fstar_iters = 20000;
  std::string out;
};

struct Sample {
  int iteration;
  double wall;
  double cost;
  double dfcs;
};

int cmd_compare(const CompareFlags& f, Manifest& manifest) {
  const LoadedProblem lp = load_problem(f.in, manifest);
  const fs::path out = prepare_out(f.out);
  const LowRankDictionary lrd = truncate_dictionary(lp.dict, f.solver.rank_tol);
  const Problem problem{lp.data, lp.dict, lrd, lp.graph, f.solver.lambda};
  SolverConfig config = make_config(f.solver);
  manifest.extra("solver") = config_json(config);
  manifest.extra("fstar_iters") = f.fstar_iters;

  // Reference optimum from the untruncated factorization of K.
  const LowRankDictionary full = truncate_dictionary(lp.dict, 1e-15);
  const Problem ref_problem{lp.data, lp.dict, full, lp.graph, f.solver.lambda};
  SolverConfig ref = config;
  ref.max_iters = f.fstar_iters;
  ref.rel_change_tol = 1e-13;
  ref.split_residual_tol = 1e-12;
  ref.trace_every = 0;
  ref.exact_k = false;
  const SolveResult star = solve_ladmm(ref_problem, ref);
  write_array(out / "f_star.sspm", NdArray::from_matrix(star.f.values));

  std::ofstream csv(out / "compare.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot open for writing: " + (out / "compare.csv").string());
  csv << "algorithm,iteration,wall_seconds,cost,dfcs\n";
  csv.precision(17);

  ordered_json summary;
  summary["f_star"] = {{"iterations", star.iterations},
                       {"termination", std::string(to_string(star.termination))},
                       {"cost", cost(ref_problem, star.f.values).total}};
  bool converged = true;
  for (const std::string algorithm : {"ladmm", "admm"}) {
    std::vector<double> dfcs_at;
    SolverConfig c = config;
    c.observer = [&](const IterationSnapshot& s) { dfcs_at.push_back(dfcs(s.estimate, star.f.values)); };
    const SolveResult r = algorithm == "ladmm" ? solve_ladmm(problem, c) : solve_admm(problem, c);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& t = r.trace[i];
      csv << algorithm << ',' << t.iteration << ',' << t.wall_seconds << ',' << t.cost << ','
          << dfcs_at[i] << '\n';
    }
    write_array(out / ("f_" + algorithm + ".sspm"), NdArray::from_matrix(r.f.values));
    summary[algorithm] = result_json(algorithm, r, problem);
    summary[algorithm]["dfcs"] = dfcs(r.f.values, star.f.values);
    converged = converged && r.termination != Termination::max_iters;
    std::cout << algorithm << ": " << r.iterations << " iterations, cost "
              << cost(problem, r.f.values).total << ", dfcs "
              << summary[algorithm]["dfcs"].get<double>() << '\n';
  }
  if (!csv) throw IoError("write failed: " + (out / "compare.csv").string());
  csv.close();
  write_json(out / "result.json", summary);
  manifest.write(out, f.solver.threads);
  if (!converged) throw NotConverged{};
  return kOk;
}

// ---------------------------------------------------------------- maps

struct MapsFlags {
  std::string f;
  std::string mask;
  std::vector<std::string> ranges;
  std::string out;
};

SpectralRange parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    return {std::stol(text.substr(0, colon)), std::stol(text.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw InvalidArgument("range must be first:last (half-open bin indices), got '" + text + "'");
  }
}

int cmd_maps(const MapsFlags& f, Manifest& manifest) {
  require_file(f.f);
  require_file(f.mask);
  manifest.add_input("f", f.f);
  manifest.add_input("mask", f.mask);
  const SpectroscopicImage est{read_array(f.f).to_matrix()};
  const NdArray mask = read_array(f.mask);
  const SpatialGraph graph = build_spatial_graph(mask);
  if (graph.voxels() != est.voxels()) {
    throw FormatError("mask selects " + std::to_string(graph.voxels()) + " voxels but f has " +
                      std::to_string(est.voxels()) + " columns");
  }
  std::vector<SpectralRange> ranges;
  for (const auto& r : f.ranges) ranges.push_back(parse_range(r));
  const auto maps = integrate_components(est, ranges);

  const fs::path out = prepare_out(f.out);
  const std::size_t width = mask.shape[0];
  const std::size_t height = mask.size() / std::max<std::size_t>(width, 1);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    std::vector<double> image(mask.size(), 0.0);
    const auto& coords = graph.voxel_coords();
    for (std::size_t v = 0; v < coords.size(); ++v) {
      std::size_t flat = 0, stride = 1;
      for (std::size_t a = 0; a < mask.shape.size(); ++a) {
        flat += coords[v][a] * stride;
        stride *= mask.shape[a];
      }
      image[flat] = maps[k](static_cast<Eigen::Index>(v));
    }
    const std::string stem = "map_" + std::to_string(k);
    write_array(out / (stem + ".sspm"), NdArray(mask.shape, image));
    write_pgm(out / (stem + ".pgm"), width, height, image);
  }
  manifest.write(out, 1);
  std::cout << "wrote " << maps.size() << " component maps\n";
  return kOk;
}

// ---------------------------------------------------------------- tune-beta

struct TuneFlags {
  InputFlags in;
  double lambda = 1.0;
  double rank_tol = kDefaultRankTolerance;
  std::vector<std::size_t> origin;
  std::vector<std::size_t> patch;
  std::vector<double> candidates;
  int probe_iters = 100;
  std::string out;
};

int cmd_tune_beta(const TuneFlags& f, Manifest& manifest) {
  const LoadedProblem lp = load_problem(f.in, manifest);
  const LowRankDictionary lrd = truncate_dictionary(lp.dict, f.rank_tol);
  const Problem problem{lp.data, lp.dict, lrd, lp.graph, f.lambda};
  std::vector<double> candidates = f.candidates;
  if (candidates.empty()) {
    const double base = default_beta(lrd);
    for (int e = -4; e <= 1; ++e) candidates.push_back(base * std::pow(10.0, e));
  }
  if (f.origin.size() > 3) throw InvalidArgument("--origin has at most three coordinates");
  LatticeCoord origin{0, 0, 0};
  std::copy(f.origin.begin(), f.origin.end(), origin.begin());
  const double beta = tune_beta(problem, origin, f.patch, candidates, f.probe_iters);
  std::cout.precision(17);
  std::cout << "beta " << beta << '\n';
  if (!f.out.empty()) {
    const fs::path out = prepare_out(f.out);
    write_json(out / "tune_beta.json", {{"beta", beta}, {"candidates", candidates}});
    manifest.write(out, 1);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Spatially regularized nonnegative spectral unmixing", "pvcm"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));

  MakeDictFlags md;
  auto* make_dict = app.add_subcommand("make-dict", "Build a dictionary from a kernel, schedule and grid");
  make_dict->add_option("--preset", md.preset, "Use a preset's dictionary (standard or diffusion)");
  make_dict->add_option("--kernel", md.kernel, "T2Exp, InversionRecoveryMSE or DiffusionT2");
  make_dict->add_option("--schedule", md.schedule, "CSV of acquisition parameters, one row per measurement");
  make_dict->add_option("--axis", md.axes, "Spectral axis min:max:count[:lin|log], repeat per dimension");
  make_dict->add_option("--matrix", md.matrix, "Explicit P x Q matrix array");
  make_dict->add_option("--rank-tol", md.rank_tol, "Truncation tolerance for the reported rank")
      ->capture_default_str();
  make_dict->add_option("--out", md.out, "Output directory")->required();

  PhantomFlags ph;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic phantom");
  phantom->add_option("--preset", ph.preset, "standard or diffusion")->capture_default_str();
  phantom->add_option("--side", ph.side, "Lattice side for the diffusion preset")->capture_default_str();
  phantom->add_option("--seed", ph.seed, "Noise seed")->capture_default_str();
  phantom->add_option("--sigma", ph.sigma, "Override the preset noise level");
  phantom->add_option("--out", ph.out, "Output directory")->required();

  SolveFlags sv;
  auto* solve = app.add_subcommand("solve", "Estimate f with LADMM, ADMM or voxelwise NNLS");
  solve->add_option("--algorithm", sv.algorithm, "ladmm, admm or nnls")
      ->check(CLI::IsMember({"ladmm", "admm", "nnls"}))
      ->capture_default_str();
  add_inputs(solve, sv.in, false);
  add_solver_flags(solve, sv.solver);
  solve->add_option("--tikhonov", sv.tikhonov, "Ridge weight for nnls")->capture_default_str();
  solve->add_option("--out", sv.out, "Output directory")->required();

  CompareFlags cf;
  auto* compare = app.add_subcommand("compare", "Run LADMM and ADMM against a reference optimum");
  add_inputs(compare, cf.in, true);
  add_solver_flags(compare, cf.solver);
  compare->add_option("--fstar-iters", cf.fstar_iters, "Iterations for the reference run")
      ->capture_default_str();
  compare->add_option("--out", cf.out, "Output directory")->required();

  MapsFlags mf;
  auto* maps = app.add_subcommand("maps", "Integrate spectral ranges into component maps");
  maps->add_option("--f", mf.f, "Estimate array, Q x N")->required();
  maps->add_option("--mask", mf.mask, "Voxel mask array")->required();
  maps->add_option("--range", mf.ranges, "Half-open bin range first:last, repeatable")->required();
  maps->add_option("--out", mf.out, "Output directory")->required();

  TuneFlags tf;
  auto* tune = app.add_subcommand("tune-beta", "Pick beta by short LADMM probes on a patch");
  add_inputs(tune, tf.in, true);
  tune->add_option("--lambda", tf.lambda, "Spatial smoothness weight")->capture_default_str();
  tune->add_option("--rank-tol", tf.rank_tol, "Truncation tolerance")->capture_default_str();
  tune->add_option("--origin", tf.origin, "Patch corner x,y[,z]")->delimiter(',')->required();
  tune->add_option("--patch", tf.patch, "Patch extent per lattice axis")->delimiter(',')->required();
  tune->add_option("--candidates", tf.candidates, "Comma-separated beta values")->delimiter(',');
  tune->add_option("--probe-iters", tf.probe_iters, "LADMM iterations per probe")->capture_default_str();
  tune->add_option("--out", tf.out, "Optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::string> arguments(argv + 1, argv + argc);
  Manifest manifest(sub->get_name(), arguments);
  manifest.options() = option_values(sub);

  try {
    if (sub == make_dict) return cmd_make_dict(md, manifest);
    if (sub == phantom) return cmd_phantom(ph, manifest);
    if (sub == solve) return cmd_solve(sv, manifest);
    if (sub == compare) return cmd_compare(cf, manifest);
    if (sub == maps) return cmd_maps(mf, manifest);
    return cmd_tune_beta(tf, manifest);
  } catch (const NotConverged&) {
    std::cerr << "pvcm: iteration cap reached before the stopping rule was met\n";
    return kNotConverged;
  } catch (const ConvergenceError& e) {
    std::cerr << "pvcm: " << e.what() << '\n';
    return kNotConverged;
  } catch (const IoError& e) {
    std::cerr << "pvcm: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "pvcm: " << e.what() << '\n';
    return kIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "pvcm: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "pvcm: " << e.what() << '\n';
    return kIo;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"pvcm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pvcm::cli
