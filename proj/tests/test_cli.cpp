#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qemlab/assignment.hpp"
#include "qemlab/commands.hpp"
#include "qemlab/csv.hpp"
#include "qemlab/em.hpp"
#include "qemlab/model_io.hpp"

using namespace qemlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qemlab_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& name = "") const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::initializer_list<std::string> args) {
    return run_cli(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("synth then fit then profile then cost runs end to end") {
    TempDir dir;
    CHECK(cli({"synth", "--out", dir.str(), "--seed", "5", "--set", "k=2", "--set", "d=3",
               "--set", "n=400", "--set", "separation=8"}) == 0);
    CHECK(fs::exists(dir.str("dataset.csv")));
    CHECK(fs::exists(dir.str("truth.json")));

    CHECK(cli({"fit", dir.str("dataset.csv"), "--out", dir.str(), "--seed", "3", "--set", "k=2",
               "--set", "kind=diagonal"}) == 0);
    CHECK(fs::exists(dir.str("model.json")));
    CHECK(read_json_file(dir.str("model.json")).at("converged").get<bool>());
    CHECK(fs::exists(dir.str("trace.csv")));
    const std::string trace = slurp(dir.str("trace.csv"));
    CHECK(trace.rfind("iter,log_likelihood,mean_probability,wall_ms\n", 0) == 0);

    CHECK(cli({"profile", dir.str("dataset.csv"), dir.str("model.json"), "--out", dir.str()}) == 0);
    CHECK(fs::exists(dir.str("profile.json")));
    CHECK(fs::exists(dir.str("table.txt")));
    const std::string table = slurp(dir.str("table.txt"));
    CHECK(table.find("kappa(V)") != std::string::npos);
    CHECK(table.find("|log det(Sigma)|") != std::string::npos);

    CHECK(cli({"cost", dir.str("profile.json"), "--out", dir.str(), "--set", "delta_theta=0.038",
               "--set", "delta_mu=0.5", "--set", "eps_tau=0.007"}) == 0);
    CHECK(fs::exists(dir.str("cost.json")));
    CHECK(fs::exists(dir.str("curves.csv")));
    const auto cost = read_json_file(dir.str("cost.json"));
    CHECK(cost.at("dominant_term").get<std::string>() == "t_sigma");
    CHECK(cost.at("inputs_echo").at("delta_mu").get<double>() == 0.5);
    CHECK(cost.at("crossover_n").is_number());
    CHECK(cost.at("crossover_n").get<double>() >= 1.0);

    // Classical column of the sweep is monotone in n.
    std::ifstream curves(dir.str("curves.csv"));
    std::string line;
    std::getline(curves, line);
    double prev = -1.0;
    while (std::getline(curves, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double classical = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(classical > prev);
        prev = classical;
    }
}

TEST_CASE("same command and seed produce a byte-identical model") {
    TempDir dir;
    REQUIRE(cli({"synth", "--out", dir.str(), "--seed", "9", "--set", "k=2", "--set", "d=2",
                 "--set", "n=200"}) == 0);
    const std::string csv = dir.str("dataset.csv");

    TempDir run_a, run_b;
    REQUIRE(cli({"fit", csv, "--out", run_a.str(), "--seed", "17", "--set", "k=2"}) == 0);
    REQUIRE(cli({"fit", csv, "--out", run_b.str(), "--seed", "17", "--set", "k=2"}) == 0);
    CHECK(slurp(run_a.str("model.json")) == slurp(run_b.str("model.json")));
}

TEST_CASE("synth with a fixed seed regenerates an identical CSV") {
    TempDir a, b;
    REQUIRE(cli({"synth", "--out", a.str(), "--seed", "21", "--set", "n=150"}) == 0);
    REQUIRE(cli({"synth", "--out", b.str(), "--seed", "21", "--set", "n=150"}) == 0);
    CHECK(slurp(a.str("dataset.csv")) == slurp(b.str("dataset.csv")));
}

TEST_CASE("CSV round-trips bitwise through parse and re-serialization") {
    TempDir dir;
    REQUIRE(cli({"synth", "--out", dir.str(), "--seed", "33", "--set", "n=120", "--set", "d=4"}) ==
            0);
    const Eigen::MatrixXd parsed = read_csv(dir.str("dataset.csv"));
    write_csv(dir.str("roundtrip.csv"), parsed);
    CHECK(slurp(dir.str("dataset.csv")) == slurp(dir.str("roundtrip.csv")));
}

TEST_CASE("model JSON round-trips through the reader") {
    TempDir dir;
    REQUIRE(cli({"synth", "--out", dir.str(), "--seed", "41", "--set", "n=100"}) == 0);
    REQUIRE(cli({"fit", dir.str("dataset.csv"), "--out", dir.str(), "--set", "k=2", "--set",
                 "kind=full"}) == 0);
    const ModelFile model = model_from_json(read_json_file(dir.str("model.json")));
    CHECK(model.params.k() == 2);
    CHECK(model.params.kind() == CovarianceKind::Full);
    CHECK_NOTHROW(model.params.verify_log_dets());
}

TEST_CASE("k larger than n exits with the domain code") {
    TempDir dir;
    Eigen::MatrixXd pts(3, 2);
    pts << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    write_csv(dir.str("tiny.csv"), pts);
    CHECK(cli({"fit", dir.str("tiny.csv"), "--out", dir.str(), "--set", "k=5"}) == 2);
}

TEST_CASE("missing files and malformed configs exit with the config code") {
    TempDir dir;
    CHECK(cli({"profile", dir.str("absent.csv"), dir.str("absent.json"), "--out", dir.str()}) == 1);
    CHECK(cli({"synth", "--out", dir.str(), "--set", "bogus_key=1"}) == 1);
    CHECK(cli({"validate", "no-such-suite", "--out", dir.str()}) == 1);

    REQUIRE(cli({"synth", "--out", dir.str(), "--set", "n=50"}) == 0);
    REQUIRE(cli({"fit", dir.str("dataset.csv"), "--out", dir.str(), "--set", "k=2"}) == 0);
    REQUIRE(cli({"profile", dir.str("dataset.csv"), dir.str("model.json"), "--out", dir.str()}) ==
            0);
    // Missing required error targets for the cost command.
    CHECK(cli({"cost", dir.str("profile.json"), "--out", dir.str()}) == 1);
}

TEST_CASE("synth rejects an empty sample request with the domain code") {
    TempDir dir;
    CHECK(cli({"synth", "--out", dir.str(), "--set", "n=0"}) == 2);
}

TEST_CASE("profiling a model against data of another width is a domain error") {
    TempDir dir;
    REQUIRE(cli({"synth", "--out", dir.str(), "--set", "n=60", "--set", "d=2"}) == 0);
    REQUIRE(cli({"fit", dir.str("dataset.csv"), "--out", dir.str(), "--set", "k=2"}) == 0);
    TempDir other;
    REQUIRE(cli({"synth", "--out", other.str(), "--set", "n=60", "--set", "d=3"}) == 0);
    CHECK(cli({"profile", other.str("dataset.csv"), dir.str("model.json"), "--out", dir.str()}) ==
          2);
}

TEST_CASE("config files merge with overrides and reject unknown keys") {
    TempDir dir;
    std::ofstream cfg(dir.str("run.cfg"));
    cfg << "# comment line\n"
        << "k = 2\n"
        << "n = 80\n";
    cfg.close();
    CHECK(cli({"synth", "--config", dir.str("run.cfg"), "--out", dir.str(), "--set", "d=3"}) == 0);
    const Eigen::MatrixXd pts = read_csv(dir.str("dataset.csv"));
    CHECK(pts.rows() == 80);
    CHECK(pts.cols() == 3);

    std::ofstream bad(dir.str("bad.cfg"));
    bad << "mystery = 1\n";
    bad.close();
    CHECK(cli({"synth", "--config", dir.str("bad.cfg"), "--out", dir.str()}) == 1);
}

TEST_CASE("huge separation makes labels perfectly recoverable up to permutation") {
    TempDir dir;
    REQUIRE(cli({"synth", "--out", dir.str(), "--seed", "55", "--set", "k=3", "--set", "d=4",
                 "--set", "n=300", "--set", "separation=1000000", "--set",
                 "mean_norm_lo=1000000", "--set", "mean_norm_hi=2000000"}) == 0);
    REQUIRE(cli({"fit", dir.str("dataset.csv"), "--out", dir.str(), "--seed", "2", "--set", "k=3",
                 "--set", "kind=diagonal"}) == 0);

    const auto truth = read_json_file(dir.str("truth.json"));
    const std::vector<int> true_labels = truth.at("labels").get<std::vector<int>>();
    const ModelFile model = model_from_json(read_json_file(dir.str("model.json")));
    const Dataset data(read_csv(dir.str("dataset.csv")));
    const std::vector<int> predicted = predict_labels(data, model.params);
    CHECK(aligned_accuracy(true_labels, predicted, 3) == doctest::Approx(1.0));
}

TEST_CASE("an option before the positional does not swallow it") {
    TempDir dir;
    REQUIRE(cli({"synth", "--set", "n=60", "--out", dir.str()}) == 0);
    CHECK(cli({"fit", "--set", "k=2", dir.str("dataset.csv"), "--out", dir.str()}) == 0);
    CHECK(fs::exists(dir.str("model.json")));
}

TEST_CASE("validate subcommand writes a machine-readable verdict") {
    TempDir dir;
    CHECK(cli({"validate", "lipschitz", "--out", dir.str(), "--set", "trials=500"}) == 0);
    const auto verdict = read_json_file(dir.str("validation.json"));
    CHECK(verdict.at("suite").get<std::string>() == "lipschitz");
    CHECK(verdict.at("pass").get<bool>());
    CHECK(verdict.at("observed").get<double>() <= verdict.at("bound").get<double>());
}

TEST_CASE("noise-bounds suite with zero deltas reports zero distances") {
    TempDir dir;
    CHECK(cli({"validate", "noise-bounds", "--out", dir.str(), "--set", "trials=50", "--set",
               "delta_theta=0", "--set", "delta_mu=0"}) == 0);
    const auto verdict = read_json_file(dir.str("validation.json"));
    CHECK(verdict.at("pass").get<bool>());
    CHECK(verdict.at("observed").get<double>() == 0.0);
}

TEST_CASE("aligned accuracy maximizes over component relabelings") {
    const std::vector<int> truth = {0, 0, 1, 1, 2, 2};
    const std::vector<int> swapped = {2, 2, 0, 0, 1, 1};
    CHECK(aligned_accuracy(truth, swapped, 3) == doctest::Approx(1.0));
    const std::vector<int> noisy = {2, 2, 0, 1, 1, 1};
    CHECK(aligned_accuracy(truth, noisy, 3) == doctest::Approx(5.0 / 6.0));
}
