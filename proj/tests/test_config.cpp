#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "kinflow/config.hpp"

using namespace kinflow;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string minimal = "density.kind = uniform_box\n"
                            "run.n_particles = 100\n"
                            "run.t_final = 0.5\n";

} // namespace

TEST_CASE("minimal config parses with documented defaults") {
    const RunConfig cfg = parse_config(minimal);
    CHECK(cfg.density_kind == "uniform_box");
    CHECK(cfg.n_particles == 100);
    CHECK(cfg.t_final == 0.5);
    CHECK(cfg.dt == 1e-3);
    CHECK(cfg.theta == 0.25);
    CHECK(cfg.drive_kind == "constant");
    CHECK(cfg.record_stride == 10);
    CHECK(cfg.record_interval() == 10 * 1e-3);
    CHECK(cfg.seed == 0);
    CHECK(cfg.out_dir == "runs");

    const auto items = cfg.canonical_items();
    CHECK(items.at("run.dt") == "0.001");
    CHECK(items.at("cutoff.theta") == "0.25");
    CHECK(items.at("force.profile") == "spring");
    CHECK(items.at("density.kind") == "uniform_box");
    CHECK(items.at("drive.quadrature_order") == "24");
}

TEST_CASE("empty config reports every missing required key") {
    CHECK_THROWS_MATCHES(
        parse_config(std::string{}), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring(
            "missing required keys: density.kind run.n_particles run.t_final")));
    // partially filled: only the absent ones are listed
    CHECK_THROWS_MATCHES(
        parse_config(std::string("run.n_particles = 10\n")), ConfigError,
        Catch::Matchers::MessageMatches(
            ContainsSubstring("missing required keys: density.kind run.t_final")));
}

TEST_CASE("constraint violations name the offending key") {
    CHECK_THROWS_MATCHES(parse_config(minimal + "cutoff.theta = -1\n"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("cutoff.theta must be positive")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "force.R = 0\n"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("force.R must be positive")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "run.t_final = -2\n"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("run.t_final must be >= 0")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "grid.bins = 1\n"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("grid.bins must lie in [2, 64]")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "density.mass = 0\n"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("density.mass must be positive")));
}

TEST_CASE("unknown keys are hard errors carrying the line number") {
    const std::string text = minimal + "run.dt = 0.01\nrun.dtt = 0.01\n";
    CHECK_THROWS_MATCHES(
        parse_config(text), ConfigError,
        Catch::Matchers::MessageMatches(
            ContainsSubstring("unknown key 'run.dtt' (line 5)")));
    CHECK_THROWS_MATCHES(parse_config(std::string("just words\n")), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(
                             "line 1: expected 'key = value'")));
}

TEST_CASE("type mismatches name key and rejected value") {
    CHECK_THROWS_MATCHES(parse_config(minimal + "run.dt = fast\n"), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(
                             "run.dt: expected a number, got 'fast'")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "run.seed = 1.5\n"), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(
                             "run.seed: expected an integer, got '1.5'")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "force.profile = hooke\n"), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(
                             "force.profile: expected spring or morse")));
    CHECK_THROWS_MATCHES(parse_config(minimal + "drive.kind = wind\n"), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring(
                             "drive.kind: expected constant, gaussian_well or lane")));
}

TEST_CASE("comments, blank lines and spacing are ignored") {
    const std::string text = "\n"
                             "  # full-line comment\n"
                             "density.kind=uniform_box   # no spaces around =\n"
                             "\trun.n_particles =\t 64\n"
                             "run.t_final = 1.0 # trailing comment\n"
                             "\n";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.n_particles == 64);
    CHECK(cfg.t_final == 1.0);
}

TEST_CASE("box bounds must satisfy lo < hi on every axis") {
    CHECK_THROWS_MATCHES(
        parse_config(minimal + "density.x_lo = 2\ndensity.x_hi = 1\n"), ConfigError,
        Catch::Matchers::MessageMatches(
            ContainsSubstring("lo < hi on every axis")));
    CHECK_THROWS_AS(parse_config(minimal + "density.vy_lo = 0.5\ndensity.vy_hi = 0.5\n"),
                    ConfigError);
    // only enforced for the box density; gaussian parameters live elsewhere
    const std::string gauss = "density.kind = truncated_gaussian\n"
                              "density.x_lo = 2\ndensity.x_hi = 1\n"
                              "run.n_particles = 10\nrun.t_final = 0\n";
    CHECK_NOTHROW(parse_config(gauss));
}

TEST_CASE("list values parse and validate elementwise") {
    const RunConfig cfg = parse_config(
        minimal + "output.snapshot_times = 0, 0.5 ,1.0\nconverge.sizes = 32,64,128\n");
    REQUIRE(cfg.snapshot_times.size() == 3);
    CHECK(cfg.snapshot_times[1] == 0.5);
    REQUIRE(cfg.sizes.size() == 3);
    CHECK(cfg.sizes[2] == 128);
    CHECK_THROWS_MATCHES(
        parse_config(minimal + "converge.sizes = 64,2048\n"), ConfigError,
        Catch::Matchers::MessageMatches(
            ContainsSubstring("converge.sizes entries must lie in [1, 1024]")));
    CHECK_THROWS_AS(parse_config(minimal + "output.snapshot_times = 0.5,-1\n"),
                    ConfigError);
}

TEST_CASE("later assignments win and parsing is idempotent") {
    const RunConfig cfg = parse_config(minimal + "run.dt = 0.01\nrun.dt = 0.02\n");
    CHECK(cfg.dt == 0.02);

    // canonical echo -> parse -> canonical echo is a fixed point
    const RunConfig base = parse_config(
        minimal + "force.profile = morse\ndrive.kind = gaussian_well\n"
                  "drive.amp = 0.3\nrun.seed = 9\noutput.snapshot_times = 0.25,1\n");
    std::string text;
    for (const auto& [k, v] : base.canonical_items()) text += k + " = " + v + "\n";
    const RunConfig reparsed = parse_config(text);
    CHECK(reparsed.canonical_items() == base.canonical_items());
}

TEST_CASE("factory accessors build the model objects described") {
    const RunConfig cfg = parse_config(
        minimal + "force.profile = morse\nforce.k_n = 2\nforce.R = 0.2\n"
                  "drive.kind = lane\ndrive.speed = 0.4\ndrive.pull = 0.1\n");
    CHECK(cfg.force_model().profile() == RadialProfile::morse);
    CHECK(cfg.cutoff(100).cut_radius() == Catch::Approx(std::pow(100.0, -0.25)));
    CHECK(cfg.drive_field().kind == DriveField::Kind::lane);
    CHECK(cfg.initial_density().mass() == 1.0);
    CHECK(cfg.mollified(100).scale() == Catch::Approx(0.01));
}

TEST_CASE("load_config reports unreadable paths") {
    CHECK_THROWS_MATCHES(load_config("/nonexistent/dir/run.cfg"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("cannot read config file")));
}
