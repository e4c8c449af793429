#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wienerlab/gauss_sim.hpp"
#include "wienerlab/io.hpp"

using namespace wienerlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("wienerlab_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& args) {
    const std::string cmd = std::string(CLI_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("path csv round trip preserves every byte of data") {
    const auto d = fresh_dir("csv");
    std::vector<SamplePath> paths(3);
    for (std::size_t p = 0; p < 3; ++p) paths[p] = gauss::simulate_wiener_path(1.0, 17, 5, p);
    io::write_paths_csv(d / "p.csv", paths);
    const auto back = io::read_paths_csv(d / "p.csv");
    REQUIRE(back.size() == paths.size());
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < paths[p].size(); ++i) {
            CHECK(back[p].times[i] == paths[p].times[i]);
            CHECK(back[p].values[i] == paths[p].values[i]);
        }
}

TEST_CASE("atomic writes leave no temporary files behind") {
    const auto d = fresh_dir("atomic");
    io::atomic_write(d / "x.txt", "hello\n");
    CHECK(slurp(d / "x.txt") == "hello\n");
    for (const auto& e : fs::directory_iterator(d))
        CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("malformed csv inputs are rejected") {
    const auto d = fresh_dir("badcsv");
    io::atomic_write(d / "bad_header.csv", "x,y\n0,0.0,1.0\n");
    CHECK_THROWS_AS(io::read_paths_csv(d / "bad_header.csv"), std::runtime_error);
    io::atomic_write(d / "gap.csv", "path_id,t,value\n0,0,0\n0,1,1\n2,0,0\n2,1,1\n");
    CHECK_THROWS_AS(io::read_paths_csv(d / "gap.csv"), std::runtime_error);
    CHECK_THROWS_AS(io::read_paths_csv(d / "nonexistent.csv"), std::runtime_error);
}

TEST_CASE("simulate writes reproducible artifacts") {
    const auto d1 = fresh_dir("sim1");
    const auto d2 = fresh_dir("sim2");
    const std::string base = "simulate --model fbm --hurst 0.7 --steps 32 --paths 10 --seed 42";
    CHECK(run(base + " --workers 1 --out " + d1.string()) == 0);
    CHECK(run(base + " --workers 8 --out " + d2.string()) == 0);
    // byte-identical regardless of the worker count
    CHECK(slurp(d1 / "paths.csv") == slurp(d2 / "paths.csv"));
    const auto man = io::read_json(d1 / "manifest.json");
    CHECK(man.at("command") == "simulate");
    CHECK(man.at("n_paths") == 10);
    CHECK(man.at("seed") == 42);
}

TEST_CASE("invalid arguments exit with the error code") {
    const auto d = fresh_dir("bad");
    CHECK(run("simulate --model nosuch --out " + d.string()) == 1);
    CHECK(run("simulate --steps 1 --out " + d.string()) == 1);
    CHECK(run("simulate --model fbm --hurst 1.5 --out " + d.string()) == 1);
    CHECK(run("report --input " + (d / "void").string()) == 1);
    CHECK(run("nosuchcommand") == 1);
}

TEST_CASE("derivative and integral pipeline over artifacts") {
    const auto d = fresh_dir("pipe");
    CHECK(run("simulate --model fbm --hurst 0.7 --steps 256 --paths 1 --seed 7 --out " +
              d.string()) == 0);
    const auto in = (d / "paths.csv").string();
    CHECK(run("frac deriv --input " + in + " --alpha 0.4 --order left --out " +
              (d / "dl").string()) == 0);
    CHECK(run("frac deriv --input " + in + " --alpha 0.4 --order right-bminus --out " +
              (d / "dr").string()) == 0);
    CHECK(fs::exists(d / "dl" / "deriv.csv"));
    CHECK(run("frac integrate --input " + in + " --against " + in + " --alpha 0.4 --out " +
              (d / "gi").string()) == 0);
    const auto res = io::read_json(d / "gi" / "integral.json");
    const double val = res.at("integral").get<double>();
    CHECK(std::isfinite(val));
    // chain rule sanity: integral of G dG is near G(1)^2 / 2
    const auto g = io::read_paths_csv(in).front();
    CHECK(val == doctest::Approx(0.5 * g.values.back() * g.values.back()).epsilon(0.2));
    CHECK(run("frac deriv --input " + in + " --alpha 0.4 --order bogus --out " + d.string()) == 1);
    CHECK(run("frac integrate --input " + in + " --alpha 0.4 --out " + d.string()) == 1);
}

TEST_CASE("representation command records residual diagnostics") {
    const auto d = fresh_dir("co");
    CHECK(run("clark-ocone --functional exp --steps 64 --paths 20 --seed 3 --out " + d.string()) ==
          0);
    const auto man = io::read_json(d / "manifest.json");
    CHECK(man.at("median_residual").get<double>() < 0.5);
    CHECK(man.at("mean_functional").get<double>() == doctest::Approx(std::exp(0.5)).epsilon(1e-9));
    CHECK(fs::exists(d / "integrands.csv"));
    CHECK(run("clark-ocone --functional bogus --out " + d.string()) == 1);
}

TEST_CASE("kernel commands: mean statistics and entropy exit codes") {
    const auto d = fresh_dir("ker");
    CHECK(run("kernel sample --theta const:0.3 --steps 64 --paths 400 --seed 9 --out " +
              d.string()) == 0);
    const auto man = io::read_json(d / "manifest.json");
    CHECK(man.at("half_square_integral").get<double>() == doctest::Approx(0.045));
    CHECK(std::abs(man.at("mean_phi").get<double>() - 1.0) <
          5.0 * man.at("se_phi").get<double>());
    CHECK(fs::exists(d / "kernel.csv"));

    // theta = 0 entropy is exactly zero and cannot be flagged
    CHECK(run("kernel entropy --theta const:0.0 --direction base --steps 32 --paths 100 --out " +
              (d / "e0").string()) == 0);
    // heavy-tailed phi log phi trips the stabilization check -> flagged exit
    CHECK(run("kernel entropy --theta const:3.0 --direction star --steps 64 --paths 2000 "
              "--seed 71 --out " +
              (d / "e1").string()) == 2);
    const auto ent = io::read_json(d / "e1" / "entropy.json");
    CHECK(ent.at("diverged") == true);
    CHECK(run("kernel entropy --theta const:0.3 --direction bogus --out " + d.string()) == 1);
    CHECK(run("kernel sample --theta nosuch --out " + d.string()) == 1);
}

TEST_CASE("optimize and report aggregation") {
    const auto d = fresh_dir("opt");
    // exit 2 (stability flag) still writes the artifact; only 1 is an error
    const int rl = run("optimize --utility log --theta const:0.3 --w 1.5 --steps 64 --paths 500 "
                       "--seed 4 --out " +
                       (d / "runs" / "log").string());
    CHECK((rl == 0 || rl == 2));
    const int rp = run("optimize --utility power --gamma 0.5 --theta const:0.3 --w 1.0 --steps 64 "
                       "--paths 500 --seed 4 --out " +
                       (d / "runs" / "pow").string());
    CHECK((rp == 0 || rp == 2));
    const auto doc = io::read_json(d / "runs" / "log" / "optimize.json");
    CHECK(doc.at("c_star").get<double>() == doctest::Approx(1.0 / 1.5));
    CHECK(run("optimize --utility bogus --out " + d.string()) == 1);

    CHECK(run("report --input " + (d / "runs").string() + " --out " + (d / "tables").string()) ==
          0);
    const std::string table = slurp(d / "tables" / "optimize_table.csv");
    CHECK(table.find("log,const:0.3") != std::string::npos);
    CHECK(table.find("power,const:0.3") != std::string::npos);
}

TEST_CASE("replication command emits per-level records") {
    const auto d = fresh_dir("rep");
    const int rc = run("replicate --hurst 0.7 --levels 5 --steps 1024 --seed 0 --out " + d.string());
    CHECK((rc == 0 || rc == 2));  // flagged runs still write artifacts
    const auto doc = io::read_json(d / "replicate.json");
    CHECK(doc.at("per_level").size() == 4);
    CHECK(fs::exists(d / "psi.csv"));
    CHECK(run("replicate --target other --out " + d.string()) == 1);
}

TEST_CASE("config file fills unset options and the command line wins") {
    const auto d = fresh_dir("cfg");
    io::write_json(d / "cfg.json", {{"steps", 64}, {"paths", 7}, {"model", "mixed"}});
    CHECK(run("simulate --config " + (d / "cfg.json").string() + " --seed 1 --out " +
              (d / "a").string()) == 0);
    const auto ma = io::read_json(d / "a" / "manifest.json");
    CHECK(ma.at("n_steps") == 64);
    CHECK(ma.at("n_paths") == 7);
    CHECK(ma.at("model") == "mixed");
    CHECK(run("simulate --config " + (d / "cfg.json").string() +
              " --steps 32 --seed 1 --out " + (d / "b").string()) == 0);
    const auto mb = io::read_json(d / "b" / "manifest.json");
    CHECK(mb.at("n_steps") == 32);
    CHECK(mb.at("n_paths") == 7);
    CHECK(run("simulate --config " + (d / "missing.json").string() + " --out " + d.string()) == 1);
}
