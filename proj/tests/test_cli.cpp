#include <doctest.h>
#include <gardner/capacity.hpp>
#include <gardner/cli.hpp>
#include <gardner/qsim.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace gardner;

namespace {

struct Result
{
    int code = -1;
    std::string out;
};

Result run_cli(const std::string& args)
{
    const std::string cmd = std::string(GARDNER_CLI_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

int column(const std::vector<std::string>& header, const std::string& name)
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    FAIL("missing column " << name);
    return -1;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("gardner_test_cli_" + name);
}

} // namespace

TEST_CASE("parse_grid")
{
    CHECK(cli::parse_grid("0, 0.5,1") == std::vector<double>{0.0, 0.5, 1.0});
    CHECK_THROWS_AS(cli::parse_grid(""), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_grid("1,1"), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_grid("1,0.5"), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_grid("0,x"), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_grid("0,"), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_grid("nan"), cli::usage_error);
    CHECK(cli::parse_int_grid("12,24") == std::vector<int>{12, 24});
    CHECK_THROWS_AS(cli::parse_int_grid("12.5,24"), cli::usage_error);
}

TEST_CASE("parse_config")
{
    std::istringstream in("# comment\nseed = 3\n\nn_list=12,24  # trailing\n");
    const auto m = cli::parse_config(in);
    CHECK(m.at("seed") == "3");
    CHECK(m.at("n-list") == "12,24");
    std::istringstream bad("seed 3\n");
    CHECK_THROWS_AS(cli::parse_config(bad), cli::usage_error);
    std::istringstream dup("seed=1\nseed=2\n");
    CHECK_THROWS_AS(cli::parse_config(dup), cli::usage_error);
}

TEST_CASE("format_real round trips")
{
    for (double x : {0.1, 2.0, -0.5674793794669713, 1e-300, 6.02214076e23}) {
        CHECK(std::stod(cli::format_real(x)) == x);
    }
    CHECK(cli::format_real(2.0) == "2");
}

TEST_CASE("theory capacity")
{
    const auto r = run_cli("theory capacity --kappa 0");
    CHECK(r.code == 0);
    CHECK(r.out == "kappa,alpha_c\n0,2\n");

    const auto rows = parse_csv(run_cli("theory capacity --kappa 0,0.5,1,2").out);
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) < std::stod(rows[i - 1][1]));
}

TEST_CASE("theory quantum")
{
    const auto r = run_cli("theory quantum --kappa 0 --epsilon 0.1,0.5 --sigma 0.25,0.5,1");
    CHECK(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 7);
    const auto& h = rows[0];
    CHECK(h == std::vector<std::string>{"kappa", "epsilon", "sigma", "kappa_tilde", "alpha_c_q", "alpha_c_classical", "ratio"});
    const int eps = column(h, "epsilon");
    const int sig = column(h, "sigma");
    const int aq = column(h, "alpha_c_q");
    const int ratio = column(h, "ratio");
    double prev = INFINITY;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double e = std::stod(rows[i][eps]);
        const double s = std::stod(rows[i][sig]);
        if (e == 0.5) CHECK(std::abs(std::stod(rows[i][ratio]) - 1.0) <= 1e-9);
        if (e == 0.1) {
            CHECK(std::stod(rows[i][aq]) < prev);
            prev = std::stod(rows[i][aq]);
            if (s == 0.5) CHECK(std::stod(rows[i][aq]) == doctest::Approx(0.7994556386).epsilon(1e-8));
        }
    }
    CHECK(run_cli("theory quantum --epsilon 0,0.1").code == 2);
    CHECK(run_cli("theory quantum --epsilon 0.1,0.6").code == 2);
}

TEST_CASE("saddle")
{
    const double ac = capacity::classical_capacity(0.0);
    const std::string grid = "0.001,0.5," + cli::format_real(0.98 * ac) + ",2,3";
    const auto r = run_cli("saddle --alpha " + grid);
    CHECK(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"alpha", "q", "free_energy", "diverged"});
    CHECK(std::stod(rows[1][1]) < 0.01);
    CHECK(std::stod(rows[3][1]) > 0.9);
    CHECK(std::stod(rows[1][2]) >= std::stod(rows[3][2]));
    CHECK(rows[1][3] == "0");
    for (int i : {4, 5}) {
        CHECK(rows[i][1] == "NA");
        CHECK(rows[i][2] == "NA");
        CHECK(rows[i][3] == "1");
    }
}

TEST_CASE("empirical")
{
    const std::string base = "empirical --n 10 --trials 50 --bootstrap 20";
    const auto r = run_cli(base);
    CHECK(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0] == std::vector<std::string>{"row", "alpha", "p", "sat_count", "trials", "failures", "p_sat", "ci_low", "ci_high"});
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        CHECK(rows[i][0] == "probe");
        const double lo = std::stod(rows[i][7]);
        const double hi = std::stod(rows[i][8]);
        const double p = std::stod(rows[i][6]);
        CHECK(lo <= p);
        CHECK(p <= hi);
    }
    CHECK(rows.back()[0] == "summary");
    const double alpha_hat = std::stod(rows.back()[1]);
    CHECK(alpha_hat > 0.5);
    CHECK(alpha_hat < 4.0);

    // kappa_tilde = kappa at epsilon = 0.5
    CHECK(run_cli(base + " --quantum --sigma 0.7 --epsilon 0.5").out == r.out);
    CHECK(run_cli("empirical --n 9").code == 2);
}

TEST_CASE("volume")
{
    const auto r = run_cli("volume --n 12 --alpha 0,0.25,0.5 --samples 300");
    CHECK(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"n", "p", "alpha", "method", "log_v_over_n", "std_error", "theory_f", "diagnostics"});
    CHECK(rows[1][1] == "0");
    CHECK(rows[1][4] == "0");
    CHECK(rows[1][6] == "0");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][7] == "ok");
    CHECK(std::stod(rows[3][6]) == doctest::Approx(capacity::free_energy(0.5, 0.3).free_energy).epsilon(1e-12));

    // quantum indicator vs classical threshold at kappa_tilde
    const capacity::TheoryParams tp{0.1, 0.2, 0.3};
    const std::string kt = cli::format_real(capacity::effective_stability(tp));
    for (const char* method : {"sequential", "hit_or_miss"}) {
        const std::string common = std::string("volume --n 12 --alpha 0.25,0.5 --samples 400 --method ") + method;
        const auto q = run_cli(common + " --quantum --kappa 0.1 --epsilon 0.2 --sigma 0.3");
        const auto c = run_cli(common + " --kappa " + kt);
        CHECK(q.code == 0);
        CHECK(q.out == c.out);
    }

    const auto miss = parse_csv(run_cli("volume --n 30 --alpha 1 --kappa 0.5 --method hit_or_miss --samples 100").out);
    CHECK(miss[1][7] == "bound_only");
    CHECK(miss[1][6] == "NA");  // above alpha_c(0.5)

    const auto fail = parse_csv(run_cli("volume --n 8 --alpha 0.25 --kappa 10 --samples 100").out);
    CHECK(fail[1][4] == "NA");
    CHECK(fail[1][7] == "stage_failure:1");

    CHECK(run_cli("volume --method exact").code == 2);
    CHECK(run_cli("volume --samples 50").code == 2);
    CHECK(run_cli("volume --quantum").code == 2);
}

TEST_CASE("circuit verify")
{
    const auto r = run_cli("circuit verify --n 5 --trials 4");
    CHECK(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"n", "trial", "mean_sim", "mean_theory", "var_sim", "var_theory", "ks_stat", "ks_pass"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ms = std::stod(rows[i][2]);
        const double mt = std::stod(rows[i][3]);
        CHECK(std::abs(ms - mt) <= 1e-9 * std::max(1.0, std::abs(mt)));
        CHECK(std::stod(rows[i][4]) == doctest::Approx(std::stod(rows[i][5])).epsilon(1e-10));
        CHECK(std::stod(rows[i][6]) <= 0.0052);
    }
    CHECK(run_cli("circuit verify --n 13").code == 2);
    CHECK(run_cli("circuit verify --sigma 0").code == 2);

    // hand-summed fixture
    vec_t w(3);
    w << 1.0, -2.0, 0.5;
    vec_t x(3);
    x << 0.3, -0.1, 0.8;
    const auto out = qsim::run_perceptron_circuit(x, w, vec_t::Constant(3, 0.3));
    CHECK(out.var_out == doctest::Approx(0.4725).epsilon(1e-12));
    vec_t one(1);
    one << 0.37;
    CHECK(qsim::run_perceptron_circuit(one, vec_t::Ones(1), vec_t::Constant(1, 0.1)).mean_out == 0.37);
}

TEST_CASE("selfavg")
{
    const auto r = run_cli("selfavg --n-list 8,12 --draws 1 --samples 200");
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"n", "draws", "mean_log_v_over_n", "std", "theory_f", "failures"});
    CHECK(rows[1][3] == "NA");
    CHECK(rows[2][3] == "NA");
    CHECK(r.code == 0);
    CHECK(run_cli("selfavg --n-list 12").code == 2);
    CHECK(run_cli("selfavg --n-list 12,8").code == 2);
}

TEST_CASE("usage errors")
{
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("theory").code == 2);
    CHECK(run_cli("bogus").code == 2);
    CHECK(run_cli("theory capacity --nope 1").code == 2);
    CHECK(run_cli("theory capacity --kappa 1,0").code == 2);
    CHECK(run_cli("theory capacity --kappa -1").code == 2);
    CHECK(run_cli("saddle --threads 0").code == 2);
    CHECK(run_cli("saddle --config /nonexistent/file").code == 2);
    CHECK(run_cli("--help").code == 0);
}

TEST_CASE("config file and flag precedence")
{
    const auto cfg = temp_file("cfg.txt");
    {
        std::ofstream f(cfg);
        f << "# manifest\nkappa = 1\nseed = 9\n";
    }
    const auto from_file = run_cli("theory capacity --config " + cfg.string());
    CHECK(from_file.code == 0);
    CHECK(from_file.out == run_cli("theory capacity --kappa 1").out);
    const auto overridden = run_cli("theory capacity --config " + cfg.string() + " --kappa 0");
    CHECK(overridden.out == "kappa,alpha_c\n0,2\n");

    {
        std::ofstream f(cfg);
        f << "quantum = true\nepsilon = 0.5\nsigma = 0.4\nn = 10\ntrials = 50\nbootstrap = 10\n";
    }
    CHECK(run_cli("empirical --config " + cfg.string()).out == run_cli("empirical --n 10 --trials 50 --bootstrap 10").out);

    {
        std::ofstream f(cfg);
        f << "shots = 10\n";
    }
    CHECK(run_cli("saddle --config " + cfg.string()).code == 2);
    std::filesystem::remove(cfg);
}

TEST_CASE("output file")
{
    const auto path = temp_file("out.csv");
    std::filesystem::remove(path);
    const auto r = run_cli("--out " + path.string() + " theory capacity --kappa 0,1");
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == run_cli("theory capacity --kappa 0,1").out);
    std::filesystem::remove(path);
    CHECK(run_cli("theory capacity --out /nonexistent/dir/x.csv").code == 2);
}

TEST_CASE("byte-identical across reruns and thread counts")
{
    const std::vector<std::string> commands = {
        "theory capacity",
        "theory quantum",
        "saddle",
        "empirical --n 12 --trials 50 --bootstrap 20",
        "empirical --n 12 --trials 50 --bootstrap 20 --quantum --sigma 0.5 --epsilon 0.1",
        "volume --n 12 --alpha 0,0.25,0.5,0.75 --samples 200",
        "volume --n 12 --alpha 0.25,0.5 --samples 2000 --method hit_or_miss",
        "circuit verify --n 4 --trials 6 --shots 2000",
        "selfavg --n-list 8,10 --draws 6 --samples 150",
    };
    for (const auto& c : commands) {
        CAPTURE(c);
        const auto a = run_cli("--seed 5 --threads 1 " + c);
        const auto b = run_cli("--seed 5 --threads 1 " + c);
        const auto d = run_cli(c + " --seed 5 --threads 4");
        CHECK(a.code != 2);
        CHECK(a.out.size() > 0);
        CHECK(a.out == b.out);
        CHECK(a.out == d.out);
    }
    CHECK(run_cli("--seed 5 volume --n 12 --samples 200").out != run_cli("--seed 6 volume --n 12 --samples 200").out);
}
