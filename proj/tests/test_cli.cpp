#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "affdim/cli.hpp"

using namespace affdim;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::path(testing::TempDir()) / name;
    std::ofstream(path) << text;
    return path.string();
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome call(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) rows.push_back(parse_csv_row(line));
    return rows;
}

const char* kDiagonalPair =
    R"({"d": 2, "maps": [{"A": [[0.5, 0], [0, 0.3333333333333333]]}, {"A": [[0.25, 0], [0, 0.2]]}]})";
const char* kThreeCopies =
    R"({"d": 2, "maps": [{"A": [[0.5, 0], [0, 0.25]]}, {"A": [[0.5, 0], [0, 0.25]], "t": [0.5, 0]},
        {"A": [[0.5, 0], [0, 0.25]], "t": [0, 0.75]}]})";
const char* kGasket =
    R"({"d": 2, "maps": [{"A": [[0.5, 0], [0, 0.5]]}, {"A": [[0.5, 0], [0, 0.5]], "t": [0.5, 0]},
        {"A": [[0.5, 0], [0, 0.5]], "t": [0.25, 0.5]}]})";

}  // namespace

TEST(NumberFormat, SeventeenDigitsAndDotSeparator) {
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(1.5), "1.5");
    EXPECT_EQ(format_number(-2.0), "-2");
    EXPECT_EQ(format_number(1e-300), "1e-300");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.33333333333333331");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    try {
        std::locale::global(std::locale("de_DE.UTF-8"));
    } catch (const std::runtime_error&) {
    }
    EXPECT_EQ(format_number(0.5), "0.5");
    std::locale::global(std::locale::classic());
}

TEST(Csv, QuotingRoundTrip) {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
    const std::string line = csv_row(fields);
    EXPECT_EQ(line, "plain,\"with,comma\",\"with \"\"quote\"\"\",\n");
    EXPECT_EQ(parse_csv_row(line), fields);
    EXPECT_THROW(parse_csv_row("\"open"), InputError);
}

TEST(IfsDocument, ParsesDefaultsAndValidates) {
    const IFSDocument doc = parse_ifs(kThreeCopies);
    EXPECT_EQ(doc.d, 2);
    EXPECT_EQ(doc.matrices.size(), 3u);
    EXPECT_EQ(doc.translations[0], (Vector{0.0, 0.0}));
    EXPECT_EQ(doc.translations[2], (Vector{0.0, 0.75}));
    EXPECT_THROW(parse_ifs("{not json"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": []})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": [{"A": [[1, 0], [0, 1]]}], "extra": 1})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": [{"A": [[1, 0], [0, 1]], "b": [0, 0]}]})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 3, "maps": [{"A": [[1, 0], [0, 1]]}]})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": [{"A": [[1, 2], [2, 4]]}]})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": [{"A": [[1, 0], [0, 1]], "t": [0]}]})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2, "maps": [{"A": [[1, 0], [0, "x"]]}]})"), InputError);
    EXPECT_THROW(parse_ifs(R"({"d": 2.5, "maps": [{"A": [[1, 0], [0, 1]]}]})"), InputError);
}

TEST(IfsDocument, SerializationRoundTripsBitExactly) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        IFSDocument doc;
        doc.d = 1 + trial % 4;
        for (int i = 0; i < 3; ++i) {
            Matrix a = Matrix::identity(doc.d);
            for (int r = 0; r < doc.d; ++r)
                for (int c = 0; c < doc.d; ++c) a(r, c) += u(rng) * std::pow(10.0, trial % 7 - 3);
            doc.matrices.push_back(a);
            Vector t(static_cast<std::size_t>(doc.d));
            for (double& x : t) x = u(rng) / 3.0;
            doc.translations.push_back(t);
        }
        const IFSDocument back = parse_ifs(serialize_ifs(doc));
        ASSERT_EQ(back.d, doc.d);
        for (std::size_t i = 0; i < doc.matrices.size(); ++i) {
            EXPECT_EQ(back.matrices[i], doc.matrices[i]);
            EXPECT_EQ(back.translations[i], doc.translations[i]);
        }
    }
}

TEST(ScanSpecDoc, GridForms) {
    const std::string base = kDiagonalPair;
    const ScanSpec a = parse_scan(R"({"base": )" + base + R"(, "t_grid": {"start": 0, "stop": 0.1, "step": 0.001}})");
    EXPECT_EQ(a.t_grid.size(), 101u);
    EXPECT_NEAR(a.t_grid.back(), 0.1, 1e-15);
    EXPECT_EQ(a.directions.size(), 2u);
    EXPECT_EQ(a.directions[0], Matrix::from_rows({{0.0, -1.0}, {1.0, 0.0}}));
    const ScanSpec b = parse_scan(R"({"base": )" + base +
                                  R"(, "directions": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]], "t_grid": [0, 0.5]})");
    EXPECT_EQ(b.t_grid, (std::vector<double>{0.0, 0.5}));
    EXPECT_EQ(b.directions[1], Matrix::diagonal({0.0, 1.0}));
    EXPECT_THROW(parse_scan(R"({"base": )" + base + R"(, "t_grid": []})"), InputError);
    EXPECT_THROW(parse_scan(R"({"base": )" + base + R"(, "t_grid": {"start": 0, "stop": 1, "step": 0}})"),
                 InputError);
    EXPECT_THROW(parse_scan(R"({"base": )" + base + R"(, "directions": [], "t_grid": [0]})"), InputError);
}

TEST(Cli, PressureRowAndCone) {
    const std::string f = write_temp("pair.json", kDiagonalPair);
    const Outcome r = call({"pressure", "--ifs", f, "--s", "1.5", "--n", "12", "--cone", "auto"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"s", "n", "upper", "lower", "method"}));
    EXPECT_NEAR(std::stod(rows[1][2]), std::log(0.5 * std::sqrt(1.0 / 3.0) + 0.25 * std::sqrt(0.2)), 1e-10);
    EXPECT_FALSE(rows[1][3].empty());
    EXPECT_EQ(rows[1][4], "cone-certified");

    const Outcome off = call({"pressure", "--ifs", f, "--s", "1.5", "--n", "6", "--cone", "off"});
    ASSERT_EQ(off.code, 0);
    const auto off_rows = parse_csv(off.out);
    EXPECT_TRUE(off_rows[1][3].empty());
    EXPECT_EQ(off_rows[1][4], "subadditive-inf");
}

TEST(Cli, DimensionThreeCopies) {
    const std::string f = write_temp("three.json", kThreeCopies);
    const Outcome r = call({"dimension", "--ifs", f, "--n", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0][1], "upper");
    EXPECT_NEAR(std::stod(rows[1][1]), 1.0 + std::log(1.5) / std::log(4.0), 1e-8);
    EXPECT_LE(std::stod(rows[1][2]), std::stod(rows[1][1]));
}

TEST(Cli, SvfJsrAndLyapunov) {
    const std::string f = write_temp("pair2.json", kDiagonalPair);
    const Outcome svf_out = call({"svf", "--ifs", f, "--smax", "2"});
    ASSERT_EQ(svf_out.code, 0);
    EXPECT_EQ(parse_csv(svf_out.out).size(), 1u + 9u * 2u);
    const Outcome jsr = call({"jsr", "--ifs", f, "--n", "1"});
    ASSERT_EQ(jsr.code, 0);
    EXPECT_NEAR(std::stod(parse_csv(jsr.out)[1][2]), 0.5, 1e-15);
    const Outcome ly = call({"lyapunov", "--ifs", f, "--seed", "3", "--steps", "5000", "--reps", "8"});
    ASSERT_EQ(ly.code, 0);
    const auto rows = parse_csv(ly.out);
    EXPECT_EQ(rows[0][1], "lambda1");
    EXPECT_EQ(rows[1][5], "distinct");
}

TEST(Cli, AttractorWritesPgmAndPoints) {
    const std::string f = write_temp("gasket.json", kGasket);
    const std::string pgm = (std::filesystem::path(testing::TempDir()) / "gasket.pgm").string();
    const std::string pts = (std::filesystem::path(testing::TempDir()) / "gasket.csv").string();
    const Outcome r = call({"attractor", "--ifs", f, "--points", "100000", "--seed", "42", "--pgm", pgm, "--grid", "256",
                            "--out", pts});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(pgm, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(bytes.substr(0, 15), "P5\n256 256\n255\n");
    EXPECT_EQ(bytes.size(), 15u + 256u * 256u);
    std::ifstream pin(pts);
    std::string header;
    std::getline(pin, header);
    EXPECT_EQ(header, "x1,x2");
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0][3], "occupied_pixels");
    EXPECT_GT(std::stoull(rows[1][3]), 1000u);
    EXPECT_NEAR(std::stod(rows[1][4]), std::log(3.0) / std::log(2.0), 0.1);
}

TEST(Cli, FalconerSmallRun) {
    const std::string f = write_temp("fal.json", R"({"d": 2, "maps": [{"A": [[0.45, 0], [0, 0.2]]},
        {"A": [[0.45, 0], [0, 0.2]]}, {"A": [[0.45, 0], [0, 0.2]]}]})");
    const Outcome r = call({"falconer", "--ifs", f, "--trials", "2", "--points", "20000", "--seed", "1", "--n", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].size(), 1u + 6u + 4u);
    EXPECT_NE(r.err.find("median_box="), std::string::npos);
}

TEST(Cli, ContinuityScan) {
    const std::string base = kDiagonalPair;
    const std::string f =
        write_temp("scan.json", R"({"base": )" + base + R"(, "t_grid": {"start": 0, "stop": 0.01, "step": 0.001}})");
    const Outcome r = call({"continuity", "--ifs", f, "--s", "1.5", "--n", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "s", "upper", "lower", "n"}));
    EXPECT_EQ(rows.size(), 12u);
    EXPECT_NE(r.err.find("max_jump="), std::string::npos);

    // a one-point grid reproduces the plain pressure call
    const std::string pair = write_temp("pair3.json", kDiagonalPair);
    const std::string one = write_temp("one.json", R"({"base": )" + base + R"(, "t_grid": [0]})");
    const auto scan_rows = parse_csv(call({"continuity", "--ifs", one, "--s", "1.5", "--n", "8"}).out);
    const auto plain_rows = parse_csv(call({"pressure", "--ifs", pair, "--s", "1.5", "--n", "8"}).out);
    ASSERT_EQ(scan_rows.size(), 2u);
    EXPECT_EQ(scan_rows[1][2], plain_rows[1][2]);
    EXPECT_EQ(scan_rows[1][3], plain_rows[1][3]);
}

TEST(Cli, ContinuityRejectsSingularGridPoint) {
    const std::string f = write_temp(
        "sing.json",
        R"({"base": {"d": 2, "maps": [{"A": [[0.5, 0], [0, 0.5]]}]}, "directions": [[[-1, 0], [0, 0]]],
            "t_grid": [0, 0.25, 0.5]})");
    const Outcome r = call({"continuity", "--ifs", f, "--s", "1", "--n", "3"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("t = 0.5"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ExitCodes) {
    const std::string pair = write_temp("pair4.json", kDiagonalPair);
    EXPECT_EQ(call({"pressure", "--ifs", pair, "--s", "1"}).code, kExitOk);
    // input errors
    const Outcome unknown = call({"pressure", "--ifs", pair, "--s", "1", "--bogus"});
    EXPECT_EQ(unknown.code, kExitInput);
    EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
    EXPECT_EQ(call({"frobnicate"}).code, kExitInput);
    EXPECT_EQ(call({}).code, kExitInput);
    EXPECT_EQ(call({"pressure", "--ifs", "/nonexistent/file.json", "--s", "1"}).code, kExitInput);
    EXPECT_EQ(call({"pressure", "--ifs", pair, "--s", "-1"}).code, kExitInput);
    EXPECT_EQ(call({"pressure", "--ifs", pair, "--s", "1", "--cone", "maybe"}).code, kExitInput);
    EXPECT_EQ(call({"attractor", "--ifs", pair, "--points", "10"}).code, kExitInput);  // no seed
    EXPECT_EQ(call({"lyapunov", "--ifs", pair}).code, kExitInput);
    EXPECT_EQ(call({"falconer", "--ifs", pair}).code, kExitInput);
    const std::string wide = write_temp("wide.json", R"({"d": 2, "maps": [{"A": [[0.6, 0], [0, 0.2]]}]})");
    EXPECT_EQ(call({"falconer", "--ifs", wide, "--seed", "1"}).code, kExitInput);
    const std::string expanding = write_temp("exp.json", R"({"d": 2, "maps": [{"A": [[2, 0], [0, 0.2]]}]})");
    EXPECT_EQ(call({"dimension", "--ifs", expanding}).code, kExitInput);
    EXPECT_EQ(call({"attractor", "--ifs", expanding, "--seed", "1"}).code, kExitInput);
    // numerical failure: the root of the partition sum exceeds the sanity cap
    std::string many = R"({"d": 1, "maps": [)";
    for (int i = 0; i < 100; ++i) many += std::string(i ? ", " : "") + R"({"A": [[0.99]]})";
    many += "]}";
    EXPECT_EQ(call({"dimension", "--ifs", write_temp("many.json", many), "--n", "1"}).code, kExitNumerical);
    // resource cap
    EXPECT_EQ(call({"pressure", "--ifs", pair, "--s", "1", "--n", "30"}).code, kExitResource);
    EXPECT_EQ(call({"jsr", "--ifs", pair, "--n", "30"}).code, kExitResource);
    // help
    EXPECT_EQ(call({"--help"}).code, kExitOk);
}

TEST(Cli, ExecutableReportsExitStatus) {
    const char* exe = std::getenv("AFFDIM_CLI");
    if (exe == nullptr) GTEST_SKIP() << "AFFDIM_CLI not set";
    const std::string pair = write_temp("pair5.json", kDiagonalPair);
    const std::string base = std::string(exe) + " pressure --ifs " + pair + " --s 1.5 --n 4";
    int status = std::system((base + " > /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(status), 0);
    status = std::system((base + " --bogus > /dev/null 2>&1").c_str());
    EXPECT_EQ(WEXITSTATUS(status), 1);
    status = std::system((std::string(exe) + " pressure --ifs " + pair + " --s 1 --n 40 > /dev/null 2>&1").c_str());
    EXPECT_EQ(WEXITSTATUS(status), 3);
}
