#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "test_support.hpp"

using namespace pvcm;
using pvcm::testing::rel_diff;
namespace fs = std::filesystem;

namespace {

// Runs the CLI with stdout and stderr captured.
struct Captured {
  int code;
  std::string out;
  std::string err;
};

Captured run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
  CHECK(run_cli({"solve", "--data", "x"}).code == cli::kUsage);
  CHECK(run_cli({"solve", "--algorithm", "sgd", "--dict", "a", "--data", "b", "--out", "c"}).code ==
        cli::kUsage);
  CHECK(run_cli({"--help"}).code == cli::kOk);
}

TEST_CASE("missing input exits 2 naming the path") {
  const auto dir = pvcm::testing::scratch_dir("cli_missing");
  const std::string missing = (dir / "absent.json").string();
  const auto r = run_cli({"solve", "--dict", missing, "--data", missing, "--out", (dir / "o").string()});
  CHECK(r.code == cli::kIo);
  CHECK(r.err.find(missing) != std::string::npos);
}

TEST_CASE("malformed array exits 2") {
  const auto dir = pvcm::testing::scratch_dir("cli_malformed");
  REQUIRE(run_cli({"phantom", "--out", (dir / "ph").string()}).code == 0);
  std::ofstream(dir / "bad.sspm") << "not an array";
  const auto r = run_cli({"solve", "--dict", (dir / "ph/dictionary.json").string(), "--data",
                          (dir / "bad.sspm").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kIo);
}

TEST_CASE("phantom output is reproducible and complete") {
  const auto dir = pvcm::testing::scratch_dir("cli_phantom");
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run_cli({"phantom", "--seed", "9", "--out", a.string()}).code == 0);
  const std::string manifest_a = slurp(a / "manifest.json");
  const std::string data_a = slurp(a / "data.sspm");
  fs::remove_all(a);
  REQUIRE(run_cli({"phantom", "--seed", "9", "--out", a.string()}).code == 0);
  CHECK(slurp(a / "manifest.json") == manifest_a);
  CHECK(slurp(a / "data.sspm") == data_a);
  REQUIRE(run_cli({"phantom", "--seed", "10", "--out", b.string()}).code == 0);
  CHECK(slurp(b / "data.sspm") != data_a);
  CHECK(slurp(b / "f_true.sspm") == slurp(a / "f_true.sspm"));
  for (const char* f : {"dictionary.json", "dictionary.sspm", "data.sspm", "f_true.sspm", "mask.sspm",
                        "phantom.json", "manifest.json", "timing.json"}) {
    CHECK(fs::exists(a / f));
  }
  const auto m = read_json(a / "manifest.json");
  CHECK(m["subcommand"] == "phantom");
  CHECK(m["seed"] == 9);
  CHECK(m["rng"] == "mt19937_64/box-muller");
  CHECK(read_json(a / "timing.json").contains("wall_seconds"));

  // Library and CLI produce the same phantom.
  const auto preset = standard_phantom(9);
  const auto ph = generate_phantom(preset.spec, preset.dictionary(), build_spatial_graph(preset.mask()));
  CHECK(read_array(a / "data.sspm").to_matrix() == ph.data.values());
}

TEST_CASE("solve nnls on an identity dictionary clamps the data") {
  const auto dir = pvcm::testing::scratch_dir("cli_nnls");
  write_array(dir / "eye.sspm", NdArray::from_matrix(Eigen::MatrixXd::Identity(4, 4)));
  REQUIRE(run_cli({"make-dict", "--matrix", (dir / "eye.sspm").string(), "--out", (dir / "d").string()})
              .code == 0);
  pvcm::testing::Gen gen(3);
  const Eigen::MatrixXd m = gen.matrix(4, 6);
  write_array(dir / "m.sspm", NdArray::from_matrix(m));
  const auto r = run_cli({"solve", "--algorithm", "nnls", "--dict", (dir / "d/dictionary.json").string(),
                          "--data", (dir / "m.sspm").string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  CHECK(rel_diff(read_array(dir / "o/f.sspm").to_matrix(), m.cwiseMax(0.0)) <= 1e-14);
  const auto man = read_json(dir / "o/manifest.json");
  CHECK(man["inputs"].size() == 3);
  CHECK(man["inputs"][1]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("make-dict from a schedule and axes") {
  const auto dir = pvcm::testing::scratch_dir("cli_make_dict");
  std::ofstream(dir / "te.csv") << "# TE in seconds\n0.01\n0.02\n0.04\n0.08\n0.16\n";
  const auto r = run_cli({"make-dict", "--kernel", "T2Exp", "--schedule", (dir / "te.csv").string(),
                          "--axis", "0.005:1:12:log", "--out", (dir / "d").string()});
  REQUIRE(r.code == 0);
  const Dictionary d = load_dictionary(dir / "d/dictionary.json");
  CHECK(d.measurements() == 5);
  CHECK(d.spectral_size() == 12);
  CHECK(fs::exists(dir / "d/svd.json"));
  CHECK(fs::exists(dir / "d/manifest.json"));
  CHECK(run_cli({"make-dict", "--kernel", "T2Exp", "--schedule", (dir / "te.csv").string(), "--axis",
                 "0.005:1", "--out", (dir / "e").string()})
            .code == cli::kUsage);
  CHECK(run_cli({"make-dict", "--out", (dir / "f").string()}).code == cli::kUsage);
}

TEST_CASE("solve ladmm and admm write estimates, traces and manifests") {
  const auto dir = pvcm::testing::scratch_dir("cli_solve");
  REQUIRE(run_cli({"phantom", "--out", (dir / "ph").string()}).code == 0);
  const std::vector<std::string> inputs{"--dict", (dir / "ph/dictionary.json").string(), "--data",
                                        (dir / "ph/data.sspm").string(), "--mask",
                                        (dir / "ph/mask.sspm").string()};
  for (const std::string alg : {"ladmm", "admm"}) {
    std::vector<std::string> args{"solve", "--algorithm", alg, "--max-iters", "50", "--trace-every", "10",
                                  "--out", (dir / alg).string()};
    args.insert(args.end(), inputs.begin(), inputs.end());
    const auto r = run_cli(args);
    CHECK(r.code == cli::kNotConverged);  // capped at 50 iterations
    CHECK(read_array(dir / alg / "f.sspm").to_matrix().cols() == 64);
    const auto res = read_json(dir / alg / "result.json");
    CHECK(res["iterations"] == 50);
    CHECK(res["termination"] == "max_iters");
    CHECK(res["state_vector_count"] == (alg == "ladmm" ? 4 : 8));
    std::ifstream trace(dir / alg / "trace.csv");
    int lines = 0;
    for (std::string l; std::getline(trace, l);) ++lines;
    CHECK(lines == 6);
    CHECK(fs::exists(dir / alg / "manifest.json"));
  }
  std::vector<std::string> args{"solve", "--algorithm", "ladmm", "--mask", (dir / "ph/mask.sspm").string(),
                                "--lambda", "-1", "--out", (dir / "neg").string()};
  args.insert(args.end(), inputs.begin(), inputs.begin() + 4);
  CHECK(run_cli(args).code == cli::kUsage);
}

TEST_CASE("thread count does not change the estimate") {
  const auto dir = pvcm::testing::scratch_dir("cli_threads");
  REQUIRE(run_cli({"phantom", "--preset", "diffusion", "--side", "12", "--out", (dir / "ph").string()})
              .code == 0);
  for (const char* t : {"1", "4"}) {
    const auto r = run_cli({"solve", "--dict", (dir / "ph/dictionary.json").string(), "--data",
                            (dir / "ph/data.sspm").string(), "--mask", (dir / "ph/mask.sspm").string(),
                            "--lambda", "0.001", "--beta", "0.01", "--max-iters", "100", "--threads", t,
                            "--out", (dir / t).string()});
    CHECK(r.code == cli::kNotConverged);
  }
  CHECK(slurp(dir / "1/f.sspm") == slurp(dir / "4/f.sspm"));
}

TEST_CASE("compare reaches the shared optimum on the standard phantom") {
  const auto dir = pvcm::testing::scratch_dir("cli_compare");
  REQUIRE(run_cli({"phantom", "--out", (dir / "ph").string()}).code == 0);
  const auto r = run_cli({"compare", "--dict", (dir / "ph/dictionary.json").string(), "--data",
                          (dir / "ph/data.sspm").string(), "--mask", (dir / "ph/mask.sspm").string(),
                          "--beta", "0.03", "--tol", "1e-13", "--split-tol", "1e-12", "--max-iters",
                          "1000000", "--trace-every", "1000", "--fstar-iters", "400000", "--out",
                          (dir / "cmp").string()});
  REQUIRE(r.code == 0);
  std::ifstream csv(dir / "cmp/compare.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "algorithm,iteration,wall_seconds,cost,dfcs");
  std::map<std::string, double> final_cost;
  std::map<std::string, double> final_dfcs;
  for (std::string line; std::getline(csv, line);) {
    std::stringstream ss(line);
    std::string alg, it, wall, cost_s, dfcs_s;
    std::getline(ss, alg, ',');
    std::getline(ss, it, ',');
    std::getline(ss, wall, ',');
    std::getline(ss, cost_s, ',');
    std::getline(ss, dfcs_s, ',');
    final_cost[alg] = std::stod(cost_s);
    final_dfcs[alg] = std::stod(dfcs_s);
  }
  REQUIRE(final_cost.size() == 2);
  CHECK(rel_diff(final_cost["ladmm"], final_cost["admm"]) <= 1e-8);
  CHECK(final_dfcs["ladmm"] < 1e-3);
  CHECK(final_dfcs["admm"] < 1e-3);
  for (const char* f : {"f_star.sspm", "f_ladmm.sspm", "f_admm.sspm", "result.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "cmp" / f));
  }
}

TEST_CASE("maps integrates spectral ranges into images") {
  const auto dir = pvcm::testing::scratch_dir("cli_maps");
  REQUIRE(run_cli({"phantom", "--out", (dir / "ph").string()}).code == 0);
  const auto r = run_cli({"maps", "--f", (dir / "ph/f_true.sspm").string(), "--mask",
                          (dir / "ph/mask.sspm").string(), "--range", "0:16", "--range", "16:32",
                          "--out", (dir / "maps").string()});
  REQUIRE(r.code == 0);
  const NdArray m0 = read_array(dir / "maps/map_0.sspm");
  const NdArray m1 = read_array(dir / "maps/map_1.sspm");
  CHECK(m0.shape == std::vector<std::size_t>{8, 8});
  const Eigen::MatrixXd f = read_array(dir / "ph/f_true.sspm").to_matrix();
  for (Eigen::Index v = 0; v < 64; ++v) {
    CHECK(m0.data[static_cast<std::size_t>(v)] + m1.data[static_cast<std::size_t>(v)] ==
          doctest::Approx(f.col(v).sum()).epsilon(1e-12));
  }
  const std::string pgm = slurp(dir / "maps/map_0.pgm");
  CHECK(pgm.rfind("P5\n8 8\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n8 8\n255\n").size() + 64);
  CHECK(run_cli({"maps", "--f", (dir / "ph/f_true.sspm").string(), "--mask", (dir / "ph/mask.sspm").string(),
                 "--range", "5", "--out", (dir / "bad").string()})
            .code == cli::kUsage);
}

TEST_CASE("tune-beta prints the chosen value") {
  const auto dir = pvcm::testing::scratch_dir("cli_tune");
  REQUIRE(run_cli({"phantom", "--out", (dir / "ph").string()}).code == 0);
  const auto r = run_cli({"tune-beta", "--dict", (dir / "ph/dictionary.json").string(), "--data",
                          (dir / "ph/data.sspm").string(), "--mask", (dir / "ph/mask.sspm").string(),
                          "--origin", "2,2", "--patch", "3,3", "--candidates", "0.5", "--probe-iters", "5",
                          "--out", (dir / "t").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out == "beta 0.5\n");
  CHECK(read_json(dir / "t/tune_beta.json")["beta"] == 0.5);
  const auto bad = run_cli({"tune-beta", "--dict", (dir / "ph/dictionary.json").string(), "--data",
                            (dir / "ph/data.sspm").string(), "--mask", (dir / "ph/mask.sspm").string(),
                            "--origin", "7,7", "--patch", "3,3"});
  CHECK(bad.code == cli::kUsage);
}
