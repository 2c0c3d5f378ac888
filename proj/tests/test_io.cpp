#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "foldcont/errors.hpp"
#include "foldcont/io.hpp"

using namespace foldcont;
namespace fs = std::filesystem;

namespace {

Problem small_interval() {
  return make_problem(ReferenceDomain::interval(32), Diffeomorphism::identity(1), Nonlinearity::exponential());
}

Branch small_branch() {
  ContinuationConfig cfg;
  cfg.mu_floor = 1.0;
  cfg.norm_cap = 10.0;
  cfg.cr_check = false;
  return trace_continuum(small_interval(), cfg);
}

}  // namespace

TEST(RunConfig, TextRoundTripIsLossless) {
  RunConfig c;
  c.mu_floor = 0.1 + 0.2;
  c.shape_epsilons = {1.0 / 3.0, 1e-7};
  c.oracle_b_grid = {};
  c.seed = 18446744073709551615ULL;
  c.cr_check = false;
  c.domain = "disk:16x32";
  const RunConfig back = parse_run_config(to_text(c));
  for (const std::string& key : RunConfig::keys()) EXPECT_EQ(back.get(key), c.get(key)) << key;
  EXPECT_EQ(back.mu_floor, c.mu_floor);
  EXPECT_EQ(back.shape_epsilons, c.shape_epsilons);
  EXPECT_TRUE(back.oracle_b_grid.empty());
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(RunConfig, SectionsCommentsAndErrors) {
  const RunConfig c = parse_run_config(
      "# comment\n[continuation]\nmu_floor = 0.5 \n; other comment\n\n[run]\nseed=7\njobs = 3\n");
  EXPECT_EQ(c.mu_floor, 0.5);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.jobs, 3);

  auto message = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("[continuation]\nmu_flor = 1\n").find("continuation.mu_flor"), std::string::npos);
  EXPECT_NE(message("[run]\nseed = 1\nseed = 2\n").find("repeated"), std::string::npos);
  EXPECT_NE(message("[run]\njobs = two\n").find("run.jobs"), std::string::npos);
  EXPECT_NE(message("[spectral]\ncr_check = maybe\n").find("spectral.cr_check"), std::string::npos);
  EXPECT_NE(message("[run\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("just text\n").find("key = value"), std::string::npos);
}

TEST(RunConfig, ValidateNamesTheKey) {
  auto message = [](const std::string& key, const std::string& value) {
    RunConfig c;
    c.set(key, value);
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  RunConfig ok;
  EXPECT_NO_THROW(ok.validate());
  EXPECT_NE(message("continuation.mu_floor", "0").find("mu_floor"), std::string::npos);
  EXPECT_NE(message("problem.domain", "sphere:3").find("problem.domain"), std::string::npos);
  EXPECT_NE(message("newton.linear_solver", "magic").find("newton.linear_solver"), std::string::npos);
  EXPECT_NE(message("shape.epsilons", "1e-2").find("shape.epsilons"), std::string::npos);
  EXPECT_NE(message("run.log_level", "loud").find("run.log_level"), std::string::npos);
  EXPECT_NE(message("oracle.b_grid", "1,-1").find("oracle.b_grid"), std::string::npos);
  EXPECT_EQ(ok.continuation().newton.tol, ok.newton_tol);
}

TEST(Json, SeventeenDigitsAndNonFinite) {
  const Json j{{"a", 0.1}, {"b", std::nan("")}, {"c", {1.0, 2.5}}, {"d", "x\"y"}, {"e", 3}};
  EXPECT_EQ(dump_json(j, -1), "{\"a\":0.10000000000000001,\"b\":null,\"c\":[1,2.5],\"d\":\"x\\\"y\",\"e\":3}");
  EXPECT_EQ(Json::parse(dump_json(j)).at("a").get<double>(), 0.1);
  EXPECT_EQ(dump_json(Json::object()), "{}");
}

TEST(Json, BranchPointRoundTripIsExact) {
  const Branch br = small_branch();
  const BranchPoint& p = br.points.back();
  const BranchPoint q = branch_point_from_json(Json::parse(dump_json(to_json(p, true))));
  EXPECT_EQ(q.s, p.s);
  EXPECT_EQ(q.mu, p.mu);
  EXPECT_EQ(q.sigma1, p.sigma1);
  EXPECT_EQ(q.morse_index, p.morse_index);
  EXPECT_EQ(q.v, p.v);
  EXPECT_EQ(q.tangent_v, p.tangent_v);
  EXPECT_EQ(q.tangent_mu, p.tangent_mu);
  EXPECT_EQ(q.newton_history, p.newton_history);
  EXPECT_THROW(branch_point_from_json(Json{{"s", 0.0}}), ConfigError);
}

TEST(Json, FoldRecordFields) {
  const Branch br = small_branch();
  ASSERT_EQ(br.folds.size(), 1u);
  const Json j = to_json(br.folds[0], true);
  EXPECT_EQ(j.at("mu_fold").get<double>(), br.folds[0].mu_fold);
  EXPECT_TRUE(j.at("cr").is_null());
  EXPECT_EQ(j.at("phi").size(), static_cast<std::size_t>(br.folds[0].eigenpair.phi.size()));
  EXPECT_FALSE(to_json(br.folds[0]).contains("phi"));
}

TEST(BranchDumps, CsvAndJsonlAgree) {
  const Branch br = small_branch();
  const std::string jsonl = branch_jsonl(br);
  std::string csv = branch_csv(br);
  EXPECT_EQ(compare_branch_dumps(jsonl, csv), "");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(br.points.size()) + 1);
  const auto pos = csv.find('\n', csv.find('\n') + 1);
  csv.insert(pos, "1");
  EXPECT_NE(compare_branch_dumps(jsonl, csv), "");
  EXPECT_NE(compare_branch_dumps(jsonl + jsonl.substr(0, jsonl.find('\n') + 1), branch_csv(br)), "");
}

TEST(Files, AtomicWriteReplacesContent) {
  const fs::path dir = fs::temp_directory_path() / "foldcont_io_test";
  fs::remove_all(dir);
  write_atomic(dir / "sub" / "a.txt", "one");
  write_atomic(dir / "sub" / "a.txt", "two");
  std::ifstream in(dir / "sub" / "a.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "sub"), fs::directory_iterator()), 1);
  fs::remove_all(dir);
}

TEST(Dumps, OperatorTripletsAreSortedAndSymmetric) {
  const Problem p = small_interval();
  const std::string text = operator_triplets(*p.op);
  std::istringstream in(text);
  std::string line;
  std::map<std::pair<int, int>, double> k;
  std::pair<int, int> prev{-1, -1};
  std::getline(in, line);
  EXPECT_EQ(line, "# stiffness row col value");
  while (std::getline(in, line) && line[0] != '#') {
    std::istringstream ls(line);
    int r = 0, c = 0;
    double v = 0.0;
    ls >> r >> c >> v;
    EXPECT_LT(prev, std::make_pair(r, c));
    prev = {r, c};
    k[{r, c}] = v;
  }
  for (const auto& [rc, v] : k) EXPECT_EQ(v, k.at({rc.second, rc.first}));
  const std::string nodes = mesh_nodes(*p.op->mesh);
  EXPECT_EQ(std::count(nodes.begin(), nodes.end(), '\n'), p.op->mesh->num_nodes() + 1);
}
