#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "koblab/curvature.hpp"
#include "koblab/errors.hpp"
#include "koblab/manifold_spec.hpp"

using namespace koblab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KOBLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("manifold spec parsing: builtins") {
    const ChartedMetric poin = parse_manifold_spec(R"js({"kind": "poincare_disc", "dim": 2})js");
    CHECK(poin.dim == 2);
    CHECK(poin.domain.kind == Domain::Kind::Ball);
    CHECK(sectional_curvature(poin, {0.2, 0.1}, {1.0, 0.0}, {0.0, 1.0}) ==
          doctest::Approx(-4.0).epsilon(1e-5));

    const ChartedMetric eu = parse_manifold_spec(
        R"js({"kind": "euclidean", "dim": 3, "params": {"halfwidth": 50.0}})js");
    CHECK(eu.dim == 3);
    CHECK(eu.domain.halfwidth[0] == 50.0);

    const ChartedMetric torus = parse_manifold_spec(
        R"js({"kind": "flat_torus", "params": {"periods": [4.0, 6.0]}})js");
    CHECK(torus.dim == 2);
    CHECK(torus.periodicity[1] == 6.0);

    const ChartedMetric warped = parse_manifold_spec(
        R"js({"kind": "warped_product", "params": {"f": "sinh(x1)", "r0": 0.5, "r1": 2.0}})js");
    CHECK(warped.dim == 2);
    const Mat g = warped.metric_at({1.0, 0.3});
    CHECK(g(1, 1) == doctest::Approx(std::sinh(1.0) * std::sinh(1.0)).epsilon(1e-12));

    const ChartedMetric expr = parse_manifold_spec(R"js({
        "kind": "expression", "dim": 2,
        "params": {"g": [["1 + x2^2", "0"], ["0", "1"]]},
        "domain": {"type": "box", "center": [0, 0], "halfwidth": [1, 1]}
    })js");
    CHECK(expr.metric_at({0.0, 0.5})(0, 0) == doctest::Approx(1.25));
}

TEST_CASE("manifold spec parsing is strict") {
    CHECK_THROWS_AS(parse_manifold_spec(R"js({"kind": "poincare_disc", "bogus": 1})js"),
                    SpecParseError);
    CHECK_THROWS_AS(parse_manifold_spec(R"js({"kind": "nonsense"})js"), SpecParseError);
    CHECK_THROWS_AS(parse_manifold_spec(R"js({"dim": 2})js"), SpecParseError);
    CHECK_THROWS_AS(parse_manifold_spec("not json at all"), SpecParseError);
    CHECK_THROWS_AS(parse_manifold_spec(
                        R"js({"kind": "euclidean", "dim": 2, "params": {"junk": 3}})js"),
                    SpecParseError);
    CHECK_THROWS_AS(parse_manifold_spec(
                        R"js({"kind": "poincare_disc", "dim": 2, "periodicity": [1.0]})js"),
                    SpecParseError);
    // expression metrics demand an explicit domain
    CHECK_THROWS_AS(parse_manifold_spec(
                        R"js({"kind": "expression", "dim": 2, "params": {"g": [["1","0"],["0","1"]]}})js"),
                    SpecParseError);
}

TEST_CASE("cli: curvature command is deterministic and scriptable") {
    spit("/tmp/koblab_poin.json", R"js({"kind": "poincare_disc", "dim": 2})js");
    const int rc1 = run_cli("--spec /tmp/koblab_poin.json --out /tmp/koblab_c1.json curvature --samples 8");
    CHECK(rc1 == 0);
    const int rc2 = run_cli("--spec /tmp/koblab_poin.json --out /tmp/koblab_c2.json curvature --samples 8");
    CHECK(rc2 == 0);
    CHECK(slurp("/tmp/koblab_c1.json") == slurp("/tmp/koblab_c2.json")); // byte identical
    CHECK(slurp("/tmp/koblab_c1.json").find("\"k_max\"") != std::string::npos);
    CHECK(slurp("/tmp/koblab_c1.json").find("\"version\"") != std::string::npos);
}

TEST_CASE("cli: csv output") {
    spit("/tmp/koblab_eu.json", R"js({"kind": "euclidean", "dim": 2})js");
    const int rc = run_cli(
        "--spec /tmp/koblab_eu.json --format csv --out /tmp/koblab_c.csv curvature --samples 5");
    CHECK(rc == 0);
    const std::string csv = slurp("/tmp/koblab_c.csv");
    CHECK(csv.rfind("p1,p2,K\n", 0) == 0);
}

TEST_CASE("cli: config errors exit with code 2") {
    CHECK(run_cli("curvature") == 2); // no spec
    spit("/tmp/koblab_bad.json", "{broken");
    CHECK(run_cli("--spec /tmp/koblab_bad.json curvature") == 2);
    spit("/tmp/koblab_unknown.json", R"js({"kind": "poincare_disc", "wat": 0})js");
    CHECK(run_cli("--spec /tmp/koblab_unknown.json curvature") == 2);
    CHECK(run_cli("--spec /tmp/koblab_missing_file.json curvature") == 2);
}

TEST_CASE("cli: metric command produces a bracket on the poincare disc") {
    spit("/tmp/koblab_poin.json", R"js({"kind": "poincare_disc", "dim": 2})js");
    const int rc = run_cli(
        "--spec /tmp/koblab_poin.json --out /tmp/koblab_m.json metric --p 0 0 --xi 1 0 "
        "--budget-radius 1.0 --resolution 33 --pinch-c 4.0");
    CHECK(rc == 0);
    const std::string out = slurp("/tmp/koblab_m.json");
    CHECK(out.find("\"upper\"") != std::string::npos);
    CHECK(out.find("\"lower\"") != std::string::npos);
    CHECK(out.find("\"certificate\"") != std::string::npos);
}

TEST_CASE("cli: disc command dumps csv and report") {
    spit("/tmp/koblab_eu.json", R"js({"kind": "euclidean", "dim": 2})js");
    const int rc = run_cli(
        "--spec /tmp/koblab_eu.json --out /tmp/koblab_d.json disc --p 0 0 --v 1 0 --w 0 1 "
        "--radius 0.3 --resolution 17 --dump /tmp/koblab_d.csv");
    CHECK(rc == 0);
    CHECK(slurp("/tmp/koblab_d.json").find("\"jet_scale\"") != std::string::npos);
    CHECK(slurp("/tmp/koblab_d.csv").rfind("node_x,node_y,u_1,u_2\n", 0) == 0);
}

TEST_CASE("cli: distance command handles p = q") {
    spit("/tmp/koblab_poin.json", R"js({"kind": "poincare_disc", "dim": 2})js");
    const int rc = run_cli(
        "--spec /tmp/koblab_poin.json --out /tmp/koblab_dist.json distance --p 0.2 0 "
        "--q 0.2 0 --mode chain");
    CHECK(rc == 0);
    CHECK(slurp("/tmp/koblab_dist.json").find("\"value\": 0") != std::string::npos);
}
