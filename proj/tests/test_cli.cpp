#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "cardiac/dataio.hpp"
#include "oracles.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CARDIAC_CAD_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("exit codes") {
  oracle::TempDir tmp("cli_codes");
  CHECK(run("") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("bogus") == 1);
  std::filesystem::create_directories(tmp / "empty");
  CHECK(run("extract --in " + (tmp / "empty").string() + " --out " + (tmp / "f.csv").string()) == 1);
  CHECK(run("extract --in " + (tmp / "missing").string() + " --out " + (tmp / "f.csv").string()) == 2);
  CHECK(run("phantom --n-per-class 0 --out " + (tmp / "p").string()) == 1);
}

TEST_CASE("phantom, extract, curve and evaluate") {
  oracle::TempDir tmp("cli_pipeline");
  const std::string a = (tmp / "a").string(), b = (tmp / "b").string();
  REQUIRE(run("--seed 5 phantom --n-per-class 1 --frames 6 --out " + a) == 0);
  REQUIRE(run("--seed 5 phantom --n-per-class 1 --frames 6 --out " + b) == 0);
  CHECK(cardiac::list_patient_dirs(a).size() == 5);
  CHECK(slurp(tmp / "a" / "labels.csv") == slurp(tmp / "b" / "labels.csv"));
  CHECK(slurp(tmp / "a" / "P0003" / "series.raw") == slurp(tmp / "b" / "P0003" / "series.raw"));

  REQUIRE(run("extract --threads 2 --in " + a + " --out " + (tmp / "fa.csv").string()) == 0);
  REQUIRE(run("extract --threads 1 --in " + b + " --out " + (tmp / "fb.csv").string()) == 0);
  const std::string features = slurp(tmp / "fa.csv");
  CHECK(features == slurp(tmp / "fb.csv"));
  CHECK(line_count(features) == 6);
  const auto table = cardiac::read_features_csv(tmp / "fa.csv");
  CHECK(table.vectors.size() == 5);

  const std::string patient = (tmp / "a" / "P0001").string();
  REQUIRE(run("curve --series " + patient + " --out " + (tmp / "c.csv").string() + " --svg " +
              (tmp / "c.svg").string()) == 0);
  const std::string curve = slurp(tmp / "c.csv");
  CHECK(curve.rfind("t,rvc_ml,lvm_ml,lvc_ml\n", 0) == 0);
  CHECK(line_count(curve) == 7);
  const std::string svg = slurp(tmp / "c.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  REQUIRE(run("curve --series " + (tmp / "a" / "P0001" / "series.json").string() + " --out " +
              (tmp / "c2.csv").string() + " --svg " + (tmp / "c2.svg").string()) == 0);
  CHECK(slurp(tmp / "c2.csv") == curve);
  CHECK(slurp(tmp / "c2.svg") == svg);

  REQUIRE(run("evaluate --pred " + a + " --gt " + b + " --out " + (tmp / "r.csv").string()) == 0);
  const std::string report = slurp(tmp / "r.csv");
  CHECK(report.rfind("group,phase,n", 0) == 0);
  CHECK(report.find("ALL,total,10,1.000000,1.000000,1.000000,0.000000,0.000000,0.000000") != std::string::npos);
}

TEST_CASE("train, predict and cv with a config file") {
  oracle::TempDir tmp("cli_train");
  const std::string p = (tmp / "p").string();
  REQUIRE(run("phantom --n-per-class 4 --frames 4 --out " + p) == 0);
  REQUIRE(run("extract --in " + p + " --out " + (tmp / "f.csv").string()) == 0);
  {
    std::ofstream cfg(tmp / "quick.ini");
    cfg << "[train]\nmax-epochs=3\nn-trees=5\nbatches-per-epoch=4\n";
  }
  const std::string common = "--features " + (tmp / "f.csv").string() + " --labels " + p + "/labels.csv";
  REQUIRE(run("--config " + (tmp / "quick.ini").string() + " train " + common + " --model " +
              (tmp / "m.json").string()) == 0);
  const auto model = cardiac::load_model(tmp / "m.json");
  CHECK(model.forest.trees.size() == 5);
  REQUIRE(run("--config " + (tmp / "quick.ini").string() + " train " + common + " --n-trees 7 --model " +
              (tmp / "m7.json").string()) == 0);
  CHECK(cardiac::load_model(tmp / "m7.json").forest.trees.size() == 7);

  REQUIRE(run("predict --features " + (tmp / "f.csv").string() + " --model " + (tmp / "m.json").string() +
              " --out " + (tmp / "pred.csv").string()) == 0);
  const std::string pred = slurp(tmp / "pred.csv");
  CHECK(pred.rfind("patient_id,p_NOR,p_MINF,p_DCM,p_HCM,p_ARV,diagnosis\n", 0) == 0);
  CHECK(line_count(pred) == 21);

  REQUIRE(run("cv -k 4 --max-epochs 2 --n-trees 3 " + common + " --predictions " + (tmp / "cv.csv").string()) == 0);
  CHECK(line_count(slurp(tmp / "cv.csv")) == 21);
  CHECK(run("predict --features " + (tmp / "f.csv").string() + " --model " + (tmp / "nope.json").string() +
            " --out " + (tmp / "x.csv").string()) == 2);
}
