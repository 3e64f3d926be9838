#pragma once

// Command-line front end. Every subcommand reads one JSON document, writes a
// CSV table with a header row to stdout (or --out), and maps failures onto
// exit codes: 1 input, 2 numerical, 3 resource cap.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affdim/cones.hpp"
#include "affdim/dimension.hpp"
#include "affdim/errors.hpp"
#include "affdim/io.hpp"
#include "affdim/measures.hpp"
#include "affdim/pressure.hpp"
#include "affdim/selfaffine.hpp"

namespace affdim {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumerical = 2, kExitResource = 3 };

struct ScanRow {
    double t = 0.0;
    double s = 0.0;
    double upper = 0.0;
    std::optional<double> lower;
    int n = 0;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    double max_jump = 0.0;
    /// t at the right end of the largest jump.
    double max_jump_at = 0.0;
};

/// Pressure bounds along A_i(t) = A_i + t D_i.
///
/// For fixed n, upper(t) = min_{k <= n} S_k(t) / k is a finite minimum of
/// functions continuous in the entries, so it is continuous in t whatever the
/// limit pressure does. The scan therefore illustrates continuity of the
/// pressure but cannot prove it. The lower column is blank when no cone (or
/// conformal structure) is available, in particular for d > 2.
inline ScanResult continuity_scan(const ScanSpec& spec, double s, int n, ConeMode mode,
                                  const PartitionOptions& opt = {}) {
    std::vector<LinearTuple> tuples;
    tuples.reserve(spec.t_grid.size());
    for (double t : spec.t_grid) {
        std::vector<Matrix> maps;
        for (std::size_t i = 0; i < spec.base.matrices.size(); ++i) {
            Matrix d = spec.directions[i];
            d *= t;
            maps.push_back(spec.base.matrices[i] + d);
        }
        try {
            tuples.emplace_back(std::move(maps));
        } catch (const InputError& e) {
            throw InputError("perturbed tuple at t = " + format_number(t) + " is not invertible: " + e.what());
        }
    }
    ScanResult out;
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        const PressureBounds b = pressure_bounds(tuples[k], s, n, Potential::Svf, mode, opt);
        out.rows.push_back({spec.t_grid[k], s, b.upper, b.lower, n});
        if (k > 0) {
            const double jump = std::abs(b.upper - out.rows[k - 1].upper);
            if (jump > out.max_jump) {
                out.max_jump = jump;
                out.max_jump_at = spec.t_grid[k];
            }
        }
    }
    return out;
}

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("write to '" + path + "' failed");
}

inline ConeMode parse_cone_mode(const std::string& v) { return v == "off" ? ConeMode::Off : ConeMode::Auto; }

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certified bounds for singular value pressure and affinity dimension", "affdim"};
    app.require_subcommand(1);

    std::string ifs_path, out_path, pgm_path, cone = "auto";
    double s = 1.0;
    std::optional<double> smax;
    int n = 10, grid = 512, trials = 20, steps = 100000, reps = 16;
    std::size_t points = 100000;
    std::uint64_t seed = 0;

    const auto cone_check = CLI::IsMember({"auto", "off"});
    auto add_ifs = [&](CLI::App* c) { c->add_option("--ifs", ifs_path, "IFS JSON document")->required(); };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", out_path, "write CSV here instead of stdout"); };

    auto* svf_cmd = app.add_subcommand("svf", "singular values and phi^s of every map");
    add_ifs(svf_cmd);
    svf_cmd->add_option("--s", s, "exponent s >= 0");
    svf_cmd->add_option("--smax", smax, "tabulate s = 0, 0.25, ..., smax instead of a single s");
    add_out(svf_cmd);

    auto* pressure_cmd = app.add_subcommand("pressure", "two-sided bounds on the SVF pressure P(A, s)");
    add_ifs(pressure_cmd);
    pressure_cmd->add_option("--s", s, "exponent s >= 0")->required();
    pressure_cmd->add_option("--n", n, "deepest word length")->capture_default_str();
    pressure_cmd->add_option("--cone", cone, "cone lower bound")->check(cone_check)->capture_default_str();
    add_out(pressure_cmd);

    auto* dim_cmd = app.add_subcommand("dimension", "bounds on the affinity dimension");
    add_ifs(dim_cmd);
    dim_cmd->add_option("--n", n, "word length")->capture_default_str();
    dim_cmd->add_option("--cone", cone, "cone lower bound")->check(cone_check)->capture_default_str();
    add_out(dim_cmd);

    auto* jsr_cmd = app.add_subcommand("jsr", "joint spectral radius bounds");
    add_ifs(jsr_cmd);
    jsr_cmd->add_option("--n", n, "longest word")->capture_default_str();
    add_out(jsr_cmd);

    auto* lyap_cmd = app.add_subcommand("lyapunov", "Monte Carlo Lyapunov exponents, uniform Bernoulli measure");
    add_ifs(lyap_cmd);
    lyap_cmd->add_option("--seed", seed, "base seed")->required();
    lyap_cmd->add_option("--steps", steps, "steps per replica")->capture_default_str();
    lyap_cmd->add_option("--reps", reps, "replicas")->capture_default_str();
    lyap_cmd->add_option("--s", s, "exponent for the energy column")->capture_default_str();
    add_out(lyap_cmd);

    auto* attr_cmd = app.add_subcommand("attractor", "chaos game, occupancy raster and box-counting slope");
    add_ifs(attr_cmd);
    attr_cmd->add_option("--seed", seed, "seed")->required();
    attr_cmd->add_option("--points", points, "sample size")->capture_default_str();
    attr_cmd->add_option("--grid", grid, "raster side in pixels")->capture_default_str();
    attr_cmd->add_option("--pgm", pgm_path, "write a binary PGM raster");
    attr_cmd->add_option("--out", out_path, "write the point cloud as CSV");

    auto* fal_cmd = app.add_subcommand("falconer", "random-translation experiment on the linear parts");
    add_ifs(fal_cmd);
    fal_cmd->add_option("--seed", seed, "base seed")->required();
    fal_cmd->add_option("--trials", trials, "translation draws")->capture_default_str();
    fal_cmd->add_option("--points", points, "points per draw")->capture_default_str();
    fal_cmd->add_option("--n", n, "word length for the affinity bounds")->capture_default_str();
    add_out(fal_cmd);

    auto* cont_cmd = app.add_subcommand("continuity", "pressure bounds along A_i + t D_i");
    cont_cmd->add_option("--ifs", ifs_path, "scan JSON document")->required();
    cont_cmd->add_option("--s", s, "exponent s >= 0")->required();
    cont_cmd->add_option("--n", n, "deepest word length")->capture_default_str();
    cont_cmd->add_option("--cone", cone, "cone lower bound")->check(cone_check)->capture_default_str();
    add_out(cont_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInput;
    }

    PartitionOptions opt;
    opt.workers = 0;

    try {
        if (svf_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            std::vector<double> grid_s;
            if (smax) {
                if (!(*smax >= 0.0)) throw InputError("--smax must be >= 0");
                for (int k = 0; 0.25 * k <= *smax + 1e-12; ++k) grid_s.push_back(0.25 * k);
            } else {
                grid_s.push_back(s);
            }
            std::string csv = csv_row({"map", "s", "svf", "log_svf", "alpha_1", "alpha_d"});
            for (double sv_s : grid_s) {
                for (int i = 0; i < t.size(); ++i) {
                    const SingularValues& sv = t.singular_values_of(i);
                    check_svf_args(sv, sv_s);
                    csv += csv_row({std::to_string(i + 1), format_number(sv_s), format_number(svf(sv, sv_s)),
                                    format_number(log_svf(sv, sv_s)), format_number(sv.largest()),
                                    format_number(sv.smallest())});
                }
            }
            detail::emit(csv, out_path, out);
        } else if (pressure_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            const PressureBounds b =
                pressure_bounds(t, s, n, Potential::Svf, detail::parse_cone_mode(cone), opt);
            const char* method = b.lower_method ? to_string(*b.lower_method) : to_string(b.upper_method);
            detail::emit(csv_row({"s", "n", "upper", "lower", "method"}) +
                             csv_row({format_number(s), std::to_string(n), format_number(b.upper),
                                      detail::optional_number(b.lower), method}),
                         out_path, out);
        } else if (dim_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            const DimensionBounds b = affinity_dimension_bounds(t, n, cone == "auto", opt);
            if (!b.warning.empty()) err << "warning: " << b.warning << '\n';
            detail::emit(csv_row({"n", "upper", "lower", "upper_method", "lower_method"}) +
                             csv_row({std::to_string(n), format_number(b.upper), detail::optional_number(b.lower),
                                      to_string(b.upper_method), b.lower_method ? to_string(*b.lower_method) : ""}),
                         out_path, out);
        } else if (jsr_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            const JsrBounds b = joint_spectral_radius_bounds(t, n, opt);
            detail::emit(csv_row({"n", "lo", "hi"}) +
                             csv_row({std::to_string(n), format_number(b.lo), format_number(b.hi)}),
                         out_path, out);
        } else if (lyap_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            BernoulliAnalysis a = lyapunov_mc(t, BernoulliWeights::uniform(t.size()), steps, reps, seed);
            attach_energy(a, s);
            const double variational = a.h + a.energy - 3.0 * a.energy_stderr;
            detail::emit(csv_row({"h", "lambda1", "lambda2", "stderr1", "stderr2", "splitting",
                                  "direction_variance", "s", "energy", "energy_stderr", "variational_lower"}) +
                             csv_row({format_number(a.h), format_number(a.lambda1), format_number(a.lambda2),
                                      format_number(a.stderr1), format_number(a.stderr2), to_string(a.splitting),
                                      format_number(a.direction_variance), format_number(s), format_number(a.energy),
                                      format_number(a.energy_stderr), format_number(variational)}),
                         out_path, out);
        } else if (attr_cmd->parsed()) {
            const AffineIFS ifs = parse_ifs(detail::read_text_file(ifs_path)).ifs();
            if (points < 1) throw InputError("--points must be >= 1");
            if (grid < 1 || grid > 16384) throw InputError("--grid must lie in [1, 16384]");
            const PointCloud cloud = chaos_game(ifs, points, kDefaultBurnIn, seed);
            std::uint64_t occupied = 0;
            if (!pgm_path.empty() || ifs.dim() == 2) {
                if (ifs.dim() != 2 && !pgm_path.empty()) throw InputError("--pgm needs d = 2");
                const std::vector<std::uint8_t> raster = occupancy_raster(cloud, grid);
                for (auto px : raster) occupied += px == 255 ? 1 : 0;
                if (!pgm_path.empty()) {
                    std::ofstream f(pgm_path, std::ios::binary);
                    if (!f) throw InputError("cannot write '" + pgm_path + "'");
                    write_pgm(f, raster, grid, grid);
                }
            }
            if (!out_path.empty()) {
                std::vector<std::string> header;
                for (int j = 0; j < cloud.dim; ++j) header.push_back("x" + std::to_string(j + 1));
                std::string csv = csv_row(header);
                std::vector<std::string> row(static_cast<std::size_t>(cloud.dim));
                for (std::size_t k = 0; k < cloud.count(); ++k) {
                    const auto p = cloud.point(k);
                    for (int j = 0; j < cloud.dim; ++j) row[static_cast<std::size_t>(j)] = format_number(p[static_cast<std::size_t>(j)]);
                    csv += csv_row(row);
                }
                detail::emit(csv, out_path, out);
            }
            const double side = bounding_box(cloud).max_extent();
            std::string slope, slope_err;
            if (side > 0.0) {
                const BoxEstimate box = box_dimension_estimate(cloud, side / 512.0, side / 16.0, 6);
                slope = format_number(box.slope);
                slope_err = format_number(box.std_error);
                if (box.undersampled) err << "warning: finest box grid is undersampled\n";
            }
            out << csv_row({"points", "radius", "grid", "occupied_pixels", "box_slope", "box_stderr"})
                << csv_row({std::to_string(cloud.count()), format_number(cloud.radius), std::to_string(grid),
                            std::to_string(occupied), slope, slope_err});
        } else if (fal_cmd->parsed()) {
            const LinearTuple t = parse_ifs(detail::read_text_file(ifs_path)).tuple();
            FalconerParams prm;
            prm.trials = trials;
            prm.points = points;
            prm.seed = seed;
            prm.level = n;
            const FalconerSummary sum = falconer_experiment(t, prm);
            std::vector<std::string> header{"trial"};
            for (int i = 1; i <= t.size(); ++i) {
                header.push_back("t" + std::to_string(i) + "_x");
                header.push_back("t" + std::to_string(i) + "_y");
            }
            for (const char* h : {"box_slope", "box_stderr", "affinity_upper", "affinity_lower"}) header.push_back(h);
            std::string csv = csv_row(header);
            for (std::size_t k = 0; k < sum.trials.size(); ++k) {
                std::vector<std::string> row{std::to_string(k + 1)};
                for (const auto& v : sum.trials[k].translations)
                    for (double x : v) row.push_back(format_number(x));
                row.push_back(format_number(sum.trials[k].box.slope));
                row.push_back(format_number(sum.trials[k].box.std_error));
                row.push_back(format_number(sum.affinity_upper));
                row.push_back(detail::optional_number(sum.affinity_lower));
                csv += csv_row(row);
            }
            detail::emit(csv, out_path, out);
            err << "# median_box=" << format_number(sum.median_box)
                << " median_abs_deviation=" << format_number(sum.median_abs_deviation)
                << " affinity_upper=" << format_number(sum.affinity_upper) << '\n';
        } else if (cont_cmd->parsed()) {
            const ScanSpec spec = parse_scan(detail::read_text_file(ifs_path));
            const ScanResult r = continuity_scan(spec, s, n, detail::parse_cone_mode(cone), opt);
            std::string csv = csv_row({"t", "s", "upper", "lower", "n"});
            for (const ScanRow& row : r.rows) {
                csv += csv_row({format_number(row.t), format_number(row.s), format_number(row.upper),
                                detail::optional_number(row.lower), std::to_string(row.n)});
            }
            detail::emit(csv, out_path, out);
            err << "# max_jump=" << format_number(r.max_jump) << " at_t=" << format_number(r.max_jump_at) << '\n';
        }
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ResourceError& e) {
        err << "resource limit: " << e.what() << '\n';
        return kExitResource;
    }
    return kExitOk;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"affdim"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace affdim
