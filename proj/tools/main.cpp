#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "slicematch/distances.hpp"
#include "slicematch/errors.hpp"
#include "slicematch/io.hpp"
#include "slicematch/measure.hpp"
#include "slicematch/registration.hpp"
#include "slicematch/rng.hpp"
#include "slicematch/slicematch.hpp"
#include "slicematch/slicing.hpp"

namespace sm = slicematch;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kStreamSplit =
    "child stream k is seeded with splitmix64(seed XOR (k+1)*0x9E3779B97F4A7C15)";

ordered_json vec_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json moments_to_json(const sm::DiscreteMeasure& nu) {
    const sm::Moments mo = sm::moments(nu);
    return ordered_json{{"mean", vec_to_json(mo.mean)}, {"second_moment", mo.second_moment}};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::out | std::ios::binary);
    if (!out) throw sm::parse_error(path + ": cannot open for writing");
    out << content;
}

struct MatchArgs {
    std::string src;
    std::string dst;
    std::string out_dir;
    std::string ortho_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int run_match(const MatchArgs& args) {
    const sm::DiscreteMeasure src = sm::read_measure_any(args.src);
    const sm::DiscreteMeasure dst = sm::read_measure_any(args.dst);

    ordered_json meta;
    meta["command"] = "match";
    meta["source"] = args.src;
    meta["destination"] = args.dst;

    std::optional<sm::OrthoMatrix> frame;
    if (!args.ortho_path.empty()) {
        frame = sm::validate_orthogonal(sm::read_matrix_csv(args.ortho_path));
        if (frame->dim() != src.dim()) {
            throw std::invalid_argument("match: frame dimension does not match the data");
        }
        meta["ortho"] = args.ortho_path;
    } else {
        sm::Rng root(args.seed);
        sm::Rng haar = root.fork(0);
        frame = sm::sample_haar_orthogonal(haar, src.dim());
        meta["seed"] = args.seed;
        meta["stream_split"] = kStreamSplit;
        meta["streams"] = ordered_json{{"haar_frame", 0}};
    }

    const sm::DiscreteMeasure matched = sm::apply_operator(src, dst, *frame);
    meta["frame"] = matrix_to_json(frame->matrix());
    meta["sliced_residual"] = sm::sliced_residual(src, dst, *frame);
    meta["moments"] = ordered_json{{"source", moments_to_json(src)},
                                   {"destination", moments_to_json(dst)},
                                   {"matched", moments_to_json(matched)}};

    std::filesystem::create_directories(args.out_dir);
    sm::write_measure_csv(args.out_dir + "/matched.csv", matched);
    if (sm::is_image_path(args.dst)) {
        const sm::IntensityGrid ref = sm::read_image(args.dst);
        const sm::IntensityGrid img = sm::render_to_grid(matched, ref.height, ref.width);
        const std::string ext = args.dst.substr(args.dst.find_last_of('.'));
        sm::write_image(args.out_dir + "/matched" + ext, img);
        meta["image"] = "matched" + ext;
    }
    write_text(args.out_dir + "/report.json", meta.dump(2) + "\n");
    return 0;
}

struct IterateArgs {
    std::string src;
    std::string dst;
    std::string out_dir;
    std::string schedule = "const:1.0";
    std::string sampler = "matrix";
    int steps = 20;
    std::uint64_t seed = 0;
    double tol = 1e-10;
    bool record_w2 = false;
};

int run_iterate(const IterateArgs& args) {
    const sm::DiscreteMeasure src = sm::read_measure_any(args.src);
    const sm::DiscreteMeasure dst = sm::read_measure_any(args.dst);

    const sm::StepSchedule schedule = sm::StepSchedule::parse(args.schedule, args.steps);
    sm::IterateOptions opts;
    if (args.sampler == "matrix") {
        opts.sampler = sm::SamplerKind::matrix;
    } else if (args.sampler == "single") {
        opts.sampler = sm::SamplerKind::single;
    } else {
        throw std::invalid_argument("iterate: sampler must be 'matrix' or 'single'");
    }
    opts.seed = args.seed;
    opts.tol = args.tol;
    opts.record_w2 = args.record_w2;

    const sm::IterateResult result = sm::iterate(src, dst, schedule, opts);

    std::filesystem::create_directories(args.out_dir);
    std::ostringstream trace;
    result.trace.write_jsonl(trace);
    write_text(args.out_dir + "/trace.jsonl", trace.str());
    sm::write_measure_csv(args.out_dir + "/final.csv", result.final);

    ordered_json meta;
    meta["command"] = "iterate";
    meta["source"] = args.src;
    meta["destination"] = args.dst;
    meta["schedule"] = args.schedule;
    meta["sampler"] = args.sampler;
    meta["steps"] = args.steps;
    meta["tol"] = args.tol;
    meta["seed"] = args.seed;
    meta["stream_split"] = kStreamSplit;
    meta["streams"] = ordered_json{{"step_k", "child stream k samples step k's directions"}};
    meta["entries"] = result.trace.entries.size();
    write_text(args.out_dir + "/metadata.json", meta.dump(2) + "\n");
    return 0;
}

struct RegisterArgs {
    std::string src;
    std::string dst;
    std::string model = "scale-shift";
    std::string distance = "w2";
    int dirs = 256;
    std::uint64_t seed = 0;
    bool strict = false;
};

int run_register(const RegisterArgs& args) {
    const sm::DiscreteMeasure src = sm::read_measure_any(args.src);
    const sm::DiscreteMeasure dst = sm::read_measure_any(args.dst);

    sm::DistanceKind kind = sm::DistanceKind::w2;
    if (args.distance == "sw2") {
        kind = sm::DistanceKind::sw2;
    } else if (args.distance != "w2") {
        throw std::invalid_argument("register: distance must be 'w2' or 'sw2'");
    }
    const sm::SwConfig sw{args.dirs, args.seed};

    ordered_json out;
    out["command"] = "register";
    out["distance"] = args.distance;
    if (kind == sm::DistanceKind::sw2) {
        out["num_directions"] = args.dirs;
        out["seed"] = args.seed;
        out["stream_split"] = kStreamSplit;
        out["streams"] = ordered_json{{"fit_estimate", "root"}, {"objective_estimate", 1}};
    }

    sm::RegistrationReport report;
    if (args.model == "translation") {
        report = sm::register_translation(src, dst, kind, sw);
        out["model"] = "translation";
        const sm::ScaleShift& s = report.scale_shift();
        out["a"] = s.a;
        out["b"] = vec_to_json(s.b);
    } else if (args.model == "scale-shift") {
        report = sm::register_scale_shift(src, dst, kind, sw);
        out["model"] = "scale-shift";
        const sm::ScaleShift& s = report.scale_shift();
        out["a"] = s.a;
        out["b"] = vec_to_json(s.b);
        if (report.scale_std_error) out["scale_std_error"] = *report.scale_std_error;
    } else if (args.model.rfind("axis:", 0) == 0) {
        const std::string frame_path = args.model.substr(5);
        const sm::OrthoMatrix p = sm::validate_orthogonal(sm::read_matrix_csv(frame_path));
        report = sm::register_axis_scaling(src, dst, p);
        out["model"] = "axis";
        out["frame"] = matrix_to_json(p.matrix());
        const sm::AxisScaling& s = report.axis_scaling();
        out["lambda"] = vec_to_json(s.lambda);
        out["b"] = vec_to_json(s.b);
    } else {
        throw std::invalid_argument(
            "register: model must be translation, scale-shift, or axis:FRAME.csv");
    }

    out["objective"] = report.objective;
    if (report.objective_std_error) out["objective_std_error"] = *report.objective_std_error;
    out["nonpositive_scale"] = report.nonpositive_scale;
    std::cout << out.dump(2) << "\n";

    if (args.strict && report.nonpositive_scale) {
        std::cerr << "register: nonpositive scale under --strict\n";
        return 5;
    }
    return 0;
}

int run_w2(const std::string& a, const std::string& b) {
    const sm::DiscreteMeasure ma = sm::read_measure_any(a);
    const sm::DiscreteMeasure mb = sm::read_measure_any(b);
    ordered_json out;
    out["value"] = sm::w2_exact(ma, mb);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_sw2(const std::string& a, const std::string& b, int dirs, std::uint64_t seed) {
    const sm::DiscreteMeasure ma = sm::read_measure_any(a);
    const sm::DiscreteMeasure mb = sm::read_measure_any(b);
    const sm::Sw2Estimate est = sm::sw2(ma, mb, dirs, seed);
    ordered_json out;
    out["value"] = est.value;
    out["std_error"] = est.std_error;
    out["num_directions"] = est.num_directions;
    out["seed"] = est.seed;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_make_ortho(int dim, std::uint64_t seed, const std::string& out_path) {
    sm::Rng rng(seed);
    const sm::OrthoMatrix p = sm::sample_haar_orthogonal(rng, dim);
    const std::string csv = sm::matrix_to_csv(p.matrix());
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path, csv);
    }
    return 0;
}

struct ReportArgs {
    std::vector<std::string> traces;
    std::string out_dir;
};

int run_report(const ReportArgs& args) {
    // Aggregate sliced residuals by step index across trace files.
    std::vector<double> sum;
    std::vector<double> sumsq;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> count;
    for (const std::string& path : args.traces) {
        std::ifstream in(path);
        if (!in) throw sm::parse_error(path + ": cannot open for reading");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            ordered_json entry;
            try {
                entry = ordered_json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw sm::parse_error(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (!entry.contains("k") || !entry.contains("sliced_residual")) {
                throw sm::parse_error(path + ":" + std::to_string(lineno) +
                                      ": trace entry lacks k/sliced_residual");
            }
            const int k = entry["k"].get<int>();
            const double r = entry["sliced_residual"].get<double>();
            if (k < 0) throw sm::parse_error(path + ": negative step index");
            if (static_cast<std::size_t>(k) >= sum.size()) {
                sum.resize(static_cast<std::size_t>(k) + 1, 0.0);
                sumsq.resize(static_cast<std::size_t>(k) + 1, 0.0);
                lo.resize(static_cast<std::size_t>(k) + 1, std::numeric_limits<double>::infinity());
                hi.resize(static_cast<std::size_t>(k) + 1, 0.0);
                count.resize(static_cast<std::size_t>(k) + 1, 0);
            }
            sum[static_cast<std::size_t>(k)] += r;
            sumsq[static_cast<std::size_t>(k)] += r * r;
            lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], r);
            hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], r);
            count[static_cast<std::size_t>(k)] += 1;
        }
    }
    if (sum.empty()) throw sm::parse_error("report: no trace entries found");

    std::filesystem::create_directories(args.out_dir);
    std::ostringstream csv;
    csv << "k,count,mean_residual,stderr_residual,min_residual,max_residual\n";
    std::vector<double> means(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) {
        means[k] = count[k] > 0 ? sum[k] / count[k] : 0.0;
        double se = 0.0;
        if (count[k] > 1) {
            const double nvar =
                std::max(0.0, sumsq[k] - sum[k] * sum[k] / count[k]) / (count[k] - 1);
            se = std::sqrt(nvar / count[k]);
        }
        csv << k << "," << count[k] << "," << sm::fmt_double(means[k]) << ","
            << sm::fmt_double(se) << ","
            << sm::fmt_double(count[k] > 0 ? lo[k] : 0.0) << ","
            << sm::fmt_double(hi[k]) << "\n";
    }
    write_text(args.out_dir + "/summary.csv", csv.str());

    // Decay plot: mean residual per step on a log10 axis.
    const int width = 640;
    const int height = 480;
    const int margin = 40;
    sm::IntensityGrid img;
    img.height = height;
    img.width = width;
    img.values.assign(static_cast<std::size_t>(width) * height, 255.0);

    double ymin = 0.0;
    double ymax = -300.0;
    std::vector<double> ys(means.size());
    for (std::size_t k = 0; k < means.size(); ++k) {
        ys[k] = std::log10(std::max(means[k], 1e-300));
        ymin = std::min(ymin, ys[k]);
        ymax = std::max(ymax, ys[k]);
    }
    if (ymax - ymin < 1.0) ymax = ymin + 1.0;

    const auto px = [&](std::size_t k) {
        const double t = means.size() > 1
                             ? static_cast<double>(k) / static_cast<double>(means.size() - 1)
                             : 0.0;
        return margin + static_cast<int>(t * (width - 2 * margin));
    };
    const auto py = [&](double y) {
        const double t = (y - ymin) / (ymax - ymin);
        return height - margin - static_cast<int>(t * (height - 2 * margin));
    };
    const auto plot = [&](int x, int y) {
        if (x >= 0 && x < width && y >= 0 && y < height) img.at(y, x) = 0.0;
    };
    const auto line = [&](int x0, int y0, int x1, int y1) {
        const int dx = std::abs(x1 - x0);
        const int dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1;
        const int sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            plot(x0, y0);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    };
    line(margin, height - margin, width - margin, height - margin);  // x axis
    line(margin, margin, margin, height - margin);                   // y axis
    for (std::size_t k = 1; k < ys.size(); ++k) {
        line(px(k - 1), py(ys[k - 1]), px(k), py(ys[k]));
    }
    sm::write_png_gray(args.out_dir + "/decay.png", img);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slice-matching transport tools"};
    app.require_subcommand(1);

    MatchArgs match_args;
    CLI::App* match = app.add_subcommand("match", "push a source onto a target's slices");
    match->add_option("source", match_args.src, "source measure (csv/pgm/png)")->required();
    match->add_option("destination", match_args.dst, "destination measure (csv/pgm/png)")
        ->required();
    match->add_option("--out", match_args.out_dir, "output directory")->required();
    match->add_option("--ortho", match_args.ortho_path, "orthogonal frame csv");
    match->add_option("--seed", match_args.seed, "seed for a Haar frame (default 0)");

    IterateArgs it_args;
    CLI::App* iter = app.add_subcommand("iterate", "run the iterative matching scheme");
    iter->add_option("source", it_args.src, "source measure")->required();
    iter->add_option("destination", it_args.dst, "destination measure")->required();
    iter->add_option("--out", it_args.out_dir, "output directory")->required();
    iter->add_option("--schedule", it_args.schedule, "const:G or harmonic:C (default const:1.0)");
    iter->add_option("--sampler", it_args.sampler, "matrix or single (default matrix)");
    iter->add_option("--steps", it_args.steps, "step budget (default 20)");
    iter->add_option("--seed", it_args.seed, "root seed (default 0)");
    iter->add_option("--tol", it_args.tol, "early-stop residual (default 1e-10, 0 disables)");
    iter->add_flag("--w2-exact", it_args.record_w2, "record exact W2 per step when supported");

    RegisterArgs reg_args;
    CLI::App* reg = app.add_subcommand("register", "fit a closed-form registration map");
    reg->add_option("source", reg_args.src, "source measure")->required();
    reg->add_option("destination", reg_args.dst, "destination measure")->required();
    reg->add_option("--model", reg_args.model,
                    "translation | scale-shift | axis:FRAME.csv (default scale-shift)");
    reg->add_option("--distance", reg_args.distance, "w2 or sw2 (default w2)");
    reg->add_option("--dirs", reg_args.dirs, "sw2 direction count (default 256)");
    reg->add_option("--seed", reg_args.seed, "sw2 seed (default 0)");
    reg->add_flag("--strict", reg_args.strict, "exit 5 on numerical degeneracy flags");

    std::string w2_a;
    std::string w2_b;
    CLI::App* w2cmd = app.add_subcommand("w2", "exact distance between uniform clouds");
    w2cmd->add_option("a", w2_a, "first measure")->required();
    w2cmd->add_option("b", w2_b, "second measure")->required();

    std::string sw2_a;
    std::string sw2_b;
    int sw2_dirs = 256;
    std::uint64_t sw2_seed = 0;
    CLI::App* sw2cmd = app.add_subcommand("sw2", "Monte-Carlo sliced distance");
    sw2cmd->add_option("a", sw2_a, "first measure")->required();
    sw2cmd->add_option("b", sw2_b, "second measure")->required();
    sw2cmd->add_option("--dirs", sw2_dirs, "direction count (default 256)");
    sw2cmd->add_option("--seed", sw2_seed, "seed (default 0)");

    int mo_dim = 0;
    std::uint64_t mo_seed = 0;
    std::string mo_out;
    CLI::App* mo = app.add_subcommand("make-ortho", "sample a Haar orthogonal frame");
    mo->add_option("--dim", mo_dim, "dimension")->required();
    mo->add_option("--seed", mo_seed, "seed (default 0)");
    mo->add_option("--out", mo_out, "output csv (default stdout)");

    ReportArgs rep_args;
    CLI::App* rep = app.add_subcommand("report", "aggregate iteration traces");
    rep->add_option("traces", rep_args.traces, "trace.jsonl files")->required();
    rep->add_option("--out", rep_args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (match->parsed()) return run_match(match_args);
        if (iter->parsed()) return run_iterate(it_args);
        if (reg->parsed()) return run_register(reg_args);
        if (w2cmd->parsed()) return run_w2(w2_a, w2_b);
        if (sw2cmd->parsed()) return run_sw2(sw2_a, sw2_b, sw2_dirs, sw2_seed);
        if (mo->parsed()) return run_make_ortho(mo_dim, mo_seed, mo_out);
        if (rep->parsed()) return run_report(rep_args);
    } catch (const sm::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sm::unsupported_instance& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const sm::degenerate_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
