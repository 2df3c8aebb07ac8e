#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vfe/cli.hpp"
#include "vfe/errors.hpp"

using namespace vfe;
namespace fs = std::filesystem;

namespace
{
struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "vfe_cli");
    std::vector<char*> argv;
    for (std::string& a : args)
    {
        argv.push_back(a.data());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("vfe_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line))
    {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ','))
        {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

const std::string kMinW = "model.min_w=0,-0.1,-0.25,-0.45,-0.7";
} // namespace

TEST_CASE("config parsing and validation")
{
    cli::Config c;
    CHECK(c.raw("geometry.kind") == "ball");
    c.set_assignment("  scenario.eps = 1e-4   # comment");
    CHECK(c.real("scenario.eps") == 1e-4);
    c.set_assignment("# only a comment");
    c.set("perforated.points", "0,0; 0.1,-0.2");
    REQUIRE(c.points("perforated.points").size() == 2);
    CHECK(c.points("perforated.points")[1].y() == -0.2);
    CHECK(c.reals("model.min_w").empty());
    c.set("model.min_w", "1, 2.5");
    CHECK(c.reals("model.min_w") == std::vector<Scalar>{1, 2.5});
    CHECK_THROWS_AS(c.set("no.such.key", "1"), ValidationError);
    try
    {
        c.set("no.such.key", "1");
    }
    catch (const ValidationError& e)
    {
        CHECK(std::string(e.what()).find("geometry.ball.rho") != std::string::npos);
    }
    c.set("scenario.eps", "abc");
    CHECK_THROWS_AS(c.real("scenario.eps"), ValidationError);
    c.set("scenario.N", "2.5");
    CHECK_THROWS_AS(c.integer("scenario.N"), ValidationError);
    CHECK_THROWS_AS(c.set_assignment("missing_equals"), ValidationError);
    CHECK(c.resolved().find("seed=0\n") == 0);
}

TEST_CASE("cli exit codes")
{
    const fs::path dir = scratch("codes");
    CHECK(run_cli({"c-omega", "--set", "bogus.key=1", "--out", dir.string()}).code == cli::exit_validation);
    const Run missing = run_cli({"critical-fields", "--out", dir.string()});
    CHECK(missing.code == cli::exit_validation);
    CHECK(missing.err.find("model.min_w") != std::string::npos);
    CHECK(run_cli({"no-such-subcommand"}).code == cli::exit_validation);
    CHECK(run_cli({"perforated-check", "--set", "perforated.points=0,0;0.001,0", "--out", dir.string()}).code ==
          cli::exit_validation);
    // One optimizer iteration cannot converge.
    CHECK(run_cli({"wn-minimize", "--set", "geometry.kind=isotropic", "--set", "discretization.max_iter=1", "--out",
                   dir.string()})
              .code == cli::exit_nonconvergence);
    CHECK(fs::exists(dir / "wn_family.csv"));
    CHECK(run_cli({"--help"}).code == cli::exit_ok);
}

TEST_CASE("cli critical-fields table")
{
    const fs::path dir = scratch("critical");
    const Run run = run_cli({"critical-fields", "--set", kMinW, "--set", "scenario.eps=1e-3", "--out", dir.string()});
    REQUIRE(run.code == cli::exit_ok);
    const auto rows = read_csv(dir / "critical_fields.csv");
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        CHECK(rows[i][0] == static_cast<double>(i + 1));
        if (i > 0)
        {
            CHECK(rows[i][2] > rows[i - 1][2]);
        }
    }
    CHECK(slurp(dir / "critical_fields.csv").rfind("N,k_N,H_N,g_eps_N\n", 0) == 0);
    CHECK(fs::exists(dir / "resolved_config.txt"));
    CHECK(slurp(dir / "resolved_config.txt").find(kMinW + "\n") != std::string::npos);
}

TEST_CASE("cli wn-minimize on the isotropic spec")
{
    const fs::path dir = scratch("wn");
    const Run run = run_cli({"wn-minimize", "--set", "geometry.kind=isotropic", "--set", "scenario.N=2", "--out",
                             dir.string(), "--seed", "3"});
    REQUIRE(run.code == cli::exit_ok);
    const auto rows = read_csv(dir / "wn_family.csv");
    const std::size_t n = rows.size() / 2;
    REQUIRE(rows.size() == 2 * n);
    for (std::size_t k = 0; k < n; ++k)
    {
        const double dx = rows[k][2] - rows[n + k][2];
        const double dy = rows[k][3] - rows[n + k][3];
        CHECK(std::hypot(dx, dy) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
    }
}

TEST_CASE("cli profile-gamma summary line")
{
    const fs::path dir = scratch("profile");
    const Run run = run_cli({"profile-gamma", "--out", dir.string()});
    REQUIRE(run.code == cli::exit_ok);
    CHECK(run.out.rfind("gamma_est=", 0) == 0);
    CHECK(run.out.find(" err=") != std::string::npos);
    CHECK(fs::exists(dir / "profile.csv"));
    const auto gamma = read_csv(dir / "gamma_convergence.csv");
    REQUIRE(gamma.size() >= 3);
    CHECK(gamma.back()[0] == 100.0);
}

TEST_CASE("cli runs are byte-identical for a fixed seed")
{
    const std::vector<std::vector<std::string>> scenarios{
        {"isoflux-maximize", "--seed", "11"},
        {"wn-minimize", "--set", "geometry.kind=kinetic", "--set", "wn.endpoints=clamped", "--set",
         "wn.clamp_radius=0.5", "--seed", "5"},
        {"optimal-n", "--set", kMinW, "--set", "scenario.h_ex_count=200"},
    };
    int index = 0;
    for (const auto& scenario : scenarios)
    {
        std::vector<fs::path> dirs;
        for (int repeat = 0; repeat < 2; ++repeat)
        {
            const fs::path dir = scratch("det" + std::to_string(index) + "_" + std::to_string(repeat));
            auto args = scenario;
            args.push_back("--out");
            args.push_back(dir.string());
            REQUIRE(run_cli(args).code == cli::exit_ok);
            dirs.push_back(dir);
        }
        for (const auto& entry : fs::directory_iterator(dirs[0]))
        {
            if (entry.path().extension() != ".csv")
            {
                continue;
            }
            CHECK_MESSAGE(slurp(entry.path()) == slurp(dirs[1] / entry.path().filename()), entry.path().string());
        }
        ++index;
    }
}
