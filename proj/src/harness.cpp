#include "xferlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "xferlab/attacks.hpp"
#include "xferlab/linalg.hpp"
#include "xferlab/rng.hpp"

namespace xferlab {
namespace {

using nlohmann::json;

json parse_json_strict(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError(std::string("unknown config field ") + where + "." + it.key());
        }
    }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, std::size_t lo) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string(key) + " must be a nonnegative integer");
    }
    auto out = v.get<std::size_t>();
    if (out < lo) throw ConfigError(std::string(key) + " must be >= " + std::to_string(lo));
    return out;
}

std::uint64_t get_seed(const json& j, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string(key) + " must be a nonnegative integer seed");
    }
    return v.get<std::uint64_t>();
}

double get_real(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    double out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(std::string(key) + " must be finite");
    return out;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::filesystem::path out_path(const RunConfig& cfg, const char* name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
}

void check_row(const SweepRow& row) {
    const double alphas[] = {row.alpha1_ts, row.alpha1_st, row.alpha2_ts, row.alpha2_st};
    for (double a : alphas) {
        if (!(a >= -1e-9 && a <= 1.0 + 1e-9)) {
            throw NumericalInconsistency("sweep ratio out of [0,1] at t=" + fmt17(row.t) +
                                         ": " + fmt17(a));
        }
    }
    if (!(row.grad_match >= 0.0) || !(row.knowledge_dist >= 0.0)) {
        throw NumericalInconsistency("negative distance at t=" + fmt17(row.t));
    }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    RunConfig cfg;
    json root = parse_json_strict(json_text, "config");
    reject_unknown_keys(root, {"data", "model", "sweep", "out_dir", "verify_seed"}, "config");

    if (root.contains("data")) {
        const json& d = root.at("data");
        reject_unknown_keys(
            d, {"n", "rbf_count", "d", "mixture_k", "num_samples", "sigma_sq_floor", "seed"},
            "data");
        cfg.data.n = get_count(d, "n", cfg.data.n, 1);
        cfg.data.rbf_count = get_count(d, "rbf_count", cfg.data.rbf_count, 1);
        cfg.data.d = get_count(d, "d", cfg.data.d, 1);
        cfg.data.mixture_k = get_count(d, "mixture_k", cfg.data.mixture_k, 1);
        cfg.data.num_samples = get_count(d, "num_samples", cfg.data.num_samples, 2);
        cfg.data.sigma_sq_floor = get_real(d, "sigma_sq_floor", cfg.data.sigma_sq_floor);
        if (!(cfg.data.sigma_sq_floor > 0.0 && cfg.data.sigma_sq_floor < 100.0)) {
            throw ConfigError("sigma_sq_floor must lie in (0, 100)");
        }
        cfg.data.seed = get_seed(d, "seed", cfg.data.seed);
    }
    if (root.contains("model")) {
        const json& m = root.at("model");
        reject_unknown_keys(
            m, {"target_width", "source_width", "lr", "epochs", "init_seed", "ref_init_seed"},
            "model");
        cfg.model.target_width = get_count(m, "target_width", cfg.model.target_width, 1);
        cfg.model.source_width = get_count(m, "source_width", cfg.model.source_width, 1);
        cfg.model.lr = get_real(m, "lr", cfg.model.lr);
        if (!(cfg.model.lr > 0.0)) throw ConfigError("lr must be positive");
        cfg.model.epochs = get_count(m, "epochs", cfg.model.epochs, 0);
        cfg.model.init_seed = get_seed(m, "init_seed", cfg.model.init_seed);
        cfg.model.ref_init_seed = get_seed(m, "ref_init_seed", cfg.model.ref_init_seed);
    }
    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        reject_unknown_keys(s,
                            {"t_start", "t_stop", "t_step", "perturb_seed", "pgd_seed",
                             "attack_order", "eps_list", "pgd_steps"},
                            "sweep");
        cfg.sweep.t_start = get_real(s, "t_start", cfg.sweep.t_start);
        cfg.sweep.t_stop = get_real(s, "t_stop", cfg.sweep.t_stop);
        cfg.sweep.t_step = get_real(s, "t_step", cfg.sweep.t_step);
        cfg.sweep.perturb_seed = get_seed(s, "perturb_seed", cfg.sweep.perturb_seed);
        cfg.sweep.pgd_seed = get_seed(s, "pgd_seed", cfg.sweep.pgd_seed);
        cfg.sweep.attack_order = get_count(s, "attack_order", cfg.sweep.attack_order, 1);
        if (cfg.sweep.attack_order > 2) throw ConfigError("attack_order must be 1 or 2");
        if (s.contains("eps_list")) {
            const json& e = s.at("eps_list");
            if (!e.is_array()) throw ConfigError("eps_list must be an array of numbers");
            cfg.sweep.eps_list.clear();
            for (const json& v : e) {
                if (!v.is_number()) throw ConfigError("eps_list entries must be numbers");
                double eps = v.get<double>();
                if (!(eps > 0.0) || !std::isfinite(eps)) {
                    throw ConfigError("eps_list entries must be positive and finite");
                }
                cfg.sweep.eps_list.push_back(eps);
            }
        }
        cfg.sweep.pgd_steps = get_count(s, "pgd_steps", cfg.sweep.pgd_steps, 1);
        if (!(cfg.sweep.t_start >= 0.0 && cfg.sweep.t_stop <= 1.0 &&
              cfg.sweep.t_start <= cfg.sweep.t_stop)) {
            throw ConfigError("t grid must satisfy 0 <= t_start <= t_stop <= 1");
        }
        if (!(cfg.sweep.t_step > 0.0)) throw ConfigError("t_step must be positive");
    }
    if (root.contains("out_dir")) {
        const json& o = root.at("out_dir");
        if (!o.is_string() || o.get<std::string>().empty()) {
            throw ConfigError("out_dir must be a nonempty string");
        }
        cfg.out_dir = o.get<std::string>();
    }
    cfg.verify_seed = get_seed(root, "verify_seed", cfg.verify_seed);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void apply_master_seed(RunConfig& cfg, std::uint64_t master) {
    cfg.data.seed = Rng::mix(master, 1);
    cfg.model.init_seed = Rng::mix(master, 2);
    cfg.model.ref_init_seed = Rng::mix(master, 3);
    cfg.sweep.perturb_seed = Rng::mix(master, 4);
    cfg.sweep.pgd_seed = Rng::mix(master, 5);
    cfg.verify_seed = Rng::mix(master, 6);
}

Vector t_grid(const SweepSettings& s) {
    Vector out;
    for (std::size_t i = 0;; ++i) {
        double t = s.t_start + static_cast<double>(i) * s.t_step;
        if (t > s.t_stop + 1e-9) break;
        out.push_back(std::min(t, s.t_stop));
    }
    return out;
}

SweepResult run_sweep(const RunConfig& cfg, const MlpOneHidden& target,
                      const MlpOneHidden& reference, const Dataset& data) {
    if (target.in_dim() != data.in_dim() || reference.in_dim() != data.in_dim()) {
        throw InvalidInput("sweep models and dataset disagree on the input dimension");
    }
    const MetricSpace ms_t = MetricSpace::identity(target.out_dim());
    const MetricSpace ms_s = MetricSpace::identity(reference.out_dim());
    const std::size_t order = cfg.sweep.attack_order;

    SweepResult result;
    const Vector grid = t_grid(cfg.sweep);
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        const double t = grid[ti];
        const MlpOneHidden source = perturb_weights(reference, t, cfg.sweep.perturb_seed);
        SweepRow row;
        row.t = t;
        row.alpha1_ts = alpha1_small_eps(target, ms_t, source, ms_s, data, order);
        row.alpha1_st = alpha1_small_eps(source, ms_s, target, ms_t, data, order);
        row.alpha2_ts = alpha2(target, ms_t, source, ms_s, data, order);
        row.alpha2_st = alpha2(source, ms_s, target, ms_t, data, order);
        row.grad_match = grad_match_residual(target, source, ms_t, data);
        row.knowledge_dist = data.has_targets() ? knowledge_dist(source, ms_t, data) : 0.0;
        check_row(row);
        result.rows.push_back(row);

        for (std::size_t ei = 0; ei < cfg.sweep.eps_list.size(); ++ei) {
            FiniteEpsRow fe;
            fe.t = t;
            fe.eps = cfg.sweep.eps_list[ei];
            fe.alpha1_ts =
                alpha1_finite_eps(target, ms_t, source, ms_s, data, fe.eps, cfg.sweep.pgd_steps,
                                  0.0, Rng::mix(cfg.sweep.pgd_seed, ti * 1024 + ei))
                    .value;
            result.finite.push_back(fe);
        }
    }
    return result;
}

std::string sweep_csv(const SweepResult& result) {
    std::string out = "t,alpha1_ts,alpha1_st,alpha2_ts,alpha2_st,grad_match,knowledge_dist\n";
    for (const SweepRow& r : result.rows) {
        out += fmt17(r.t) + "," + fmt17(r.alpha1_ts) + "," + fmt17(r.alpha1_st) + "," +
               fmt17(r.alpha2_ts) + "," + fmt17(r.alpha2_st) + "," + fmt17(r.grad_match) + "," +
               fmt17(r.knowledge_dist) + "\n";
    }
    return out;
}

std::string finite_eps_csv(const SweepResult& result) {
    std::string out = "t,eps,alpha1_ts\n";
    for (const FiniteEpsRow& r : result.finite) {
        out += fmt17(r.t) + "," + fmt17(r.eps) + "," + fmt17(r.alpha1_ts) + "\n";
    }
    return out;
}

std::string emit_svg(const SweepResult& result) {
    if (result.rows.size() < 2) throw InvalidInput("svg output needs at least 2 sweep rows");
    static const char* kNames[6] = {"alpha1_ts", "alpha1_st",    "alpha2_ts",
                                    "alpha2_st", "grad_match", "knowledge_dist"};
    static const char* kColors[6] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                     "#d62728", "#9467bd", "#8c564b"};
    const std::size_t n = result.rows.size();
    std::vector<Vector> series(6, Vector(n));
    Vector ts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SweepRow& r = result.rows[i];
        ts[i] = r.t;
        series[0][i] = r.alpha1_ts;
        series[1][i] = r.alpha1_st;
        series[2][i] = r.alpha2_ts;
        series[3][i] = r.alpha2_st;
        series[4][i] = r.grad_match;
        series[5][i] = r.knowledge_dist;
    }

    const double left = 60.0, top = 40.0, plot_w = 560.0, plot_h = 460.0;
    const double bottom = top + plot_h;
    const double t_lo = ts.front(), t_hi = ts.back();
    const double t_span = (t_hi > t_lo) ? (t_hi - t_lo) : 1.0;
    auto xmap = [&](double t) { return left + (t - t_lo) / t_span * plot_w; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"900\" "
           "height=\"560\" viewBox=\"0 0 900 560\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"900\" height=\"560\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"60\" y=\"24\" font-family=\"monospace\" font-size=\"14\">"
           "perturbation sweep (each series scaled to its own range)</text>\n";
    svg += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(bottom) + "\" x2=\"" +
           fmt2(left + plot_w) + "\" y2=\"" + fmt2(bottom) +
           "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(top) + "\" x2=\"" + fmt2(left) +
           "\" y2=\"" + fmt2(bottom) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt2(left) + "\" y=\"" + fmt2(bottom + 20.0) +
           "\" font-family=\"monospace\" font-size=\"12\">t=" + fmt6(t_lo) + "</text>\n";
    svg += "<text x=\"" + fmt2(left + plot_w - 60.0) + "\" y=\"" + fmt2(bottom + 20.0) +
           "\" font-family=\"monospace\" font-size=\"12\">t=" + fmt6(t_hi) + "</text>\n";

    for (std::size_t s = 0; s < 6; ++s) {
        double lo = series[s][0], hi = series[s][0];
        for (double v : series[s]) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = (hi - lo > 1e-12) ? (hi - lo) : 1.0;
        auto ymap = [&](double v) { return bottom - (v - lo) / span * plot_h; };

        std::string points;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) points += " ";
            points += fmt2(xmap(ts[i])) + "," + fmt2(ymap(series[s][i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += kColors[s];
        svg += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";

        const double ly = 60.0 + static_cast<double>(s) * 44.0;
        svg += "<line x1=\"660\" y1=\"" + fmt2(ly) + "\" x2=\"690\" y2=\"" + fmt2(ly) +
               "\" stroke=\"";
        svg += kColors[s];
        svg += "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"698\" y=\"" + fmt2(ly + 4.0) +
               "\" font-family=\"monospace\" font-size=\"13\">";
        svg += kNames[s];
        svg += "</text>\n";
        svg += "<text x=\"698\" y=\"" + fmt2(ly + 19.0) +
               "\" font-family=\"monospace\" font-size=\"10\" fill=\"#666666\">[" + fmt6(lo) +
               ", " + fmt6(hi) + "]</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

int cmd_gen(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const DataConfig& d = cfg.data;
    RbfTarget target =
        make_target(d.n, d.rbf_count, d.d, Rng::mix(d.seed, 1), d.sigma_sq_floor);
    MixtureSpec mixture = make_mixture(d.mixture_k, d.n, Rng::mix(d.seed, 2));
    Dataset data = sample_dataset(target, mixture, d.num_samples, Rng::mix(d.seed, 3));
    const std::string target_path = out_path(cfg, "target.json").string();
    const std::string data_path = out_path(cfg, "dataset.csv").string();
    save_target(target, target_path);
    save_dataset(data, data_path);
    std::printf("wrote %s (%zu rows) and %s\n", data_path.c_str(), data.size(),
                target_path.c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    Dataset data = load_dataset(out_path(cfg, "dataset.csv").string());
    if (!data.has_targets()) throw InvalidInput("training needs a dataset with targets");
    TrainResult trained =
        train_from_seed(data.in_dim(), cfg.model.target_width, data.target_dim(), data,
                        cfg.model.lr, cfg.model.epochs, cfg.model.init_seed);
    const std::string model_path = out_path(cfg, "model_target.json").string();
    save_model(trained.model, model_path);
    std::printf("wrote %s (loss %.6g -> %.6g over %zu epochs)\n", model_path.c_str(),
                trained.losses.front(), trained.losses.back(), cfg.model.epochs);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    Dataset data = load_dataset(out_path(cfg, "dataset.csv").string());
    MlpOneHidden target = load_model(out_path(cfg, "model_target.json").string());

    // Same source width reuses the trained model as the perturbation base;
    // a different width gets its own independently trained base.
    MlpOneHidden reference = target;
    if (cfg.model.source_width != target.hidden_dim()) {
        TrainResult ref =
            train_from_seed(data.in_dim(), cfg.model.source_width, data.target_dim(), data,
                            cfg.model.lr, cfg.model.epochs, cfg.model.ref_init_seed);
        reference = ref.model;
        save_model(reference, out_path(cfg, "model_ref.json").string());
    }

    SweepResult result = run_sweep(cfg, target, reference, data);
    const std::string csv_path = out_path(cfg, "sweep.csv").string();
    write_text(csv_path, sweep_csv(result));
    write_text(out_path(cfg, "sweep.svg").string(), emit_svg(result));
    if (!result.finite.empty()) {
        write_text(out_path(cfg, "sweep_finite_eps.csv").string(), finite_eps_csv(result));
    }
    std::printf("wrote %s (%zu rows)\n", csv_path.c_str(), result.rows.size());
    return 0;
}

namespace {

// ---- verification suites -------------------------------------------------
//
// Every suite draws its own small random instances from a per-suite stream,
// so suite selection never shifts another suite's draws.

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
    return m;
}

// Well-conditioned positive definite metric with a randomized overall scale.
Matrix random_metric(Rng& rng, std::size_t dim) {
    Matrix g = gaussian_matrix(rng, dim, dim);
    Matrix h = matmul(transpose(g), g);
    double s = frobenius(h);
    if (s <= 0.0) return scale(Matrix::identity(dim), rng.uniform(0.5, 2.0));
    h = scale(h, 1.0 / s);
    Matrix ridge = scale(Matrix::identity(dim), 0.3);
    return scale(add(h, ridge), rng.uniform(0.5, 2.0));
}

MlpOneHidden random_mlp(Rng& rng, std::size_t n, std::size_t m) {
    std::size_t h = 3 + rng.next_u64() % 5;
    return MlpOneHidden::random(n, h, m, rng.next_u64());
}

Dataset gaussian_inputs(Rng& rng, std::size_t count, std::size_t n) {
    return Dataset(gaussian_matrix(rng, count, n), Matrix());
}

Dataset gaussian_labeled(Rng& rng, std::size_t count, std::size_t n, std::size_t d) {
    Matrix x = gaussian_matrix(rng, count, n);
    Matrix y = gaussian_matrix(rng, count, d);
    return Dataset(std::move(x), std::move(y));
}

struct TrialCounter {
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::vector<std::string> notes;

    void record(bool ok, const std::string& note_on_failure) {
        ++trials;
        if (!ok) {
            ++failures;
            if (notes.size() < 8) notes.push_back(note_on_failure);
        }
    }
};

SuiteResult finish(const char* name, const TrialCounter& c) {
    SuiteResult r;
    r.name = name;
    r.trials = c.trials;
    r.failures = c.failures;
    r.passed = (c.failures == 0 && c.trials > 0);
    r.notes = c.notes;
    return r;
}

// Closed-form and attack-spectrum routes to the gradient-matching distance
// must agree to roundoff, in both pairing directions.
SuiteResult suite_grad_identity(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t n = 4 + rng.next_u64() % 5;
        std::size_t m1 = 2 + rng.next_u64() % 4;
        std::size_t m2 = 2 + rng.next_u64() % 4;
        std::size_t count = 20 + rng.next_u64() % 41;
        MlpOneHidden f1 = random_mlp(rng, n, m1);
        MlpOneHidden f2 = random_mlp(rng, n, m2);
        MetricSpace ms1 = MetricSpace::from_psd(random_metric(rng, m1));
        MetricSpace ms2 = MetricSpace::from_psd(random_metric(rng, m2));
        Dataset data = gaussian_inputs(rng, count, n);

        bool ok = true;
        std::string note;
        for (int dir = 0; dir < 2; ++dir) {
            const DifferentiableModel& fs = dir == 0 ? static_cast<DifferentiableModel&>(f1) : f2;
            const DifferentiableModel& fd = dir == 0 ? static_cast<DifferentiableModel&>(f2) : f1;
            const MetricSpace& mss = dir == 0 ? ms1 : ms2;
            const MetricSpace& msd = dir == 0 ? ms2 : ms1;
            double closed = grad_match_closed(fs, fd, mss, data);
            SpectralGradMatch spectral = grad_match_spectral(fs, mss, fd, msd, data);
            if (std::abs(spectral.value - closed) > 1e-8 * (1.0 + closed)) {
                ok = false;
                note = "trial " + std::to_string(trial) + " dir " + std::to_string(dir) +
                       ": closed " + fmt17(closed) + " vs spectral " + fmt17(spectral.value);
            }
        }
        c.record(ok, note);
    }
    return finish("grad-identity", c);
}

// Mean-outer-product and ordered-pair evaluations of the direction-agreement
// ratio are the same number.
SuiteResult suite_alpha2_pair(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t n = 2 + rng.next_u64() % 5;
        std::size_t m1 = 1 + rng.next_u64() % 4;
        std::size_t m2 = 1 + rng.next_u64() % 4;
        std::size_t count = 2 + rng.next_u64() % 99;
        MlpOneHidden f1 = random_mlp(rng, n, m1);
        MlpOneHidden f2 = random_mlp(rng, n, m2);
        MetricSpace ms1 = MetricSpace::from_psd(random_metric(rng, m1));
        MetricSpace ms2 = MetricSpace::from_psd(random_metric(rng, m2));
        Dataset data = gaussian_inputs(rng, count, n);
        double direct = alpha2(f1, ms1, f2, ms2, data);
        double paired = alpha2_pairwise(f1, ms1, f2, ms2, data);
        bool ok = std::abs(direct - paired) <= 1e-10 * (1.0 + direct);
        c.record(ok, "trial " + std::to_string(trial) + ": direct " + fmt17(direct) +
                         " vs paired " + fmt17(paired));
    }
    return finish("alpha2-pair", c);
}

// All three transfer ratios stay inside [0, 1].
SuiteResult suite_ranges(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t n = 2 + rng.next_u64() % 5;
        std::size_t m1 = 1 + rng.next_u64() % 4;
        std::size_t m2 = 1 + rng.next_u64() % 4;
        std::size_t count = 5 + rng.next_u64() % 11;
        std::size_t order = (trial % 4 == 3) ? 2 : 1;
        MlpOneHidden f1 = random_mlp(rng, n, m1);
        MlpOneHidden f2 = random_mlp(rng, n, m2);
        MetricSpace ms1 = MetricSpace::from_psd(random_metric(rng, m1));
        MetricSpace ms2 = MetricSpace::from_psd(random_metric(rng, m2));
        Dataset data = gaussian_inputs(rng, count, n);

        const double vals[] = {alpha1_small_eps(f1, ms1, f2, ms2, data, order),
                               alpha1_small_eps(f2, ms2, f1, ms1, data, order),
                               alpha2(f1, ms1, f2, ms2, data, order),
                               alpha1_alpha2(f1, ms1, f2, ms2, data, order)};
        bool ok = true;
        std::string note;
        for (double v : vals) {
            if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
                ok = false;
                note = "trial " + std::to_string(trial) + ": ratio " + fmt17(v);
            }
        }
        c.record(ok, note);
    }
    return finish("ranges", c);
}

// The rebuilt cross term never exceeds the gradient mass: its fraction of
// the total sits in [0, 1].
SuiteResult suite_alignment_range(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t n = 2 + rng.next_u64() % 5;
        std::size_t m1 = 1 + rng.next_u64() % 4;
        std::size_t m2 = 1 + rng.next_u64() % 4;
        std::size_t count = 5 + rng.next_u64() % 26;
        MlpOneHidden f1 = random_mlp(rng, n, m1);
        MlpOneHidden f2 = random_mlp(rng, n, m2);
        MetricSpace ms1 = MetricSpace::from_psd(random_metric(rng, m1));
        MetricSpace ms2 = MetricSpace::from_psd(random_metric(rng, m2));
        Dataset data = gaussian_inputs(rng, count, n);
        SpectralGradMatch g = trial % 2 == 0 ? grad_match_spectral(f1, ms1, f2, ms2, data)
                                             : grad_match_spectral(f2, ms2, f1, ms1, data);
        bool ok = g.fraction >= -1e-9 && g.fraction <= 1.0 + 1e-9;
        c.record(ok, "trial " + std::to_string(trial) + ": fraction " + fmt17(g.fraction));
    }
    return finish("alignment-range", c);
}

// Curvature twins x^2 and sgn(x) x^2: signs cancel on a symmetric grid
// (agreement ratio 0) and align on a positive grid (every ratio 1).
SuiteResult suite_sign_example(std::size_t, Rng) {
    TrialCounter c;
    Analytic1D square(Analytic1D::Kind::Square);
    Analytic1D signed_square(Analytic1D::Kind::SignedSquare);
    MetricSpace ms = MetricSpace::identity(1);

    Matrix sym(2001, 1);
    for (int j = -1000; j <= 1000; ++j) {
        sym(static_cast<std::size_t>(j + 1000), 0) = static_cast<double>(j) / 1000.0;
    }
    Dataset sym_data(std::move(sym), Matrix());
    double a2_fw = alpha2(square, ms, signed_square, ms, sym_data);
    double a2_bw = alpha2(signed_square, ms, square, ms, sym_data);
    c.record(std::abs(a2_fw) <= 1e-9, "symmetric grid forward: " + fmt17(a2_fw));
    c.record(std::abs(a2_bw) <= 1e-9, "symmetric grid backward: " + fmt17(a2_bw));

    // Midpoint grid on (0, 2): strictly positive inputs, so no zero-gradient
    // point dilutes the means.
    Matrix pos(2001, 1);
    for (std::size_t i = 0; i < 2001; ++i) {
        pos(i, 0) = (static_cast<double>(i) + 0.5) * (2.0 / 2001.0);
    }
    Dataset pos_data(std::move(pos), Matrix());
    double a1_fw = alpha1_small_eps(square, ms, signed_square, ms, pos_data);
    double a1_bw = alpha1_small_eps(signed_square, ms, square, ms, pos_data);
    double p2_fw = alpha2(square, ms, signed_square, ms, pos_data);
    double p2_bw = alpha2(signed_square, ms, square, ms, pos_data);
    c.record(std::abs(a1_fw - 1.0) <= 1e-9, "positive grid alpha1 forward: " + fmt17(a1_fw));
    c.record(std::abs(a1_bw - 1.0) <= 1e-9, "positive grid alpha1 backward: " + fmt17(a1_bw));
    c.record(std::abs(p2_fw - 1.0) <= 1e-9, "positive grid alpha2 forward: " + fmt17(p2_fw));
    c.record(std::abs(p2_bw - 1.0) <= 1e-9, "positive grid alpha2 backward: " + fmt17(p2_bw));
    return finish("sign-example", c);
}

// Distance-to-labels and distance-between-models differ by at most the
// probed model's own fit to the labels.
SuiteResult suite_surrogate_bound(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t n = 2 + rng.next_u64() % 5;
        std::size_t ms_dim = 1 + rng.next_u64() % 4;
        std::size_t mt_dim = 1 + rng.next_u64() % 4;
        std::size_t count = 6 + rng.next_u64() % 35;
        MlpOneHidden f_src = random_mlp(rng, n, ms_dim);
        MlpOneHidden f_tgt = random_mlp(rng, n, mt_dim);
        MetricSpace ms_tgt = MetricSpace::from_psd(random_metric(rng, mt_dim));
        Dataset data = gaussian_labeled(rng, count, n, mt_dim);
        SurrogateBound b = surrogate_transfer_bound(f_src, f_tgt, ms_tgt, data);
        c.record(b.holds, "trial " + std::to_string(trial) + ": |" + fmt17(b.knowledge) +
                              " - " + fmt17(b.func) + "| > " + fmt17(b.budget));
    }
    return finish("surrogate-bound", c);
}

// Swapping the fitting direction is controlled by the reverse map's
// conditioning; exercised on narrower, wider, and equal output widths.
SuiteResult suite_reversal_bound(std::size_t trials, Rng rng) {
    TrialCounter c;
    const std::size_t per_case = trials;
    for (int kase = 0; kase < 3; ++kase) {
        std::size_t done = 0;
        std::size_t attempts = 0;
        while (done < per_case && attempts < per_case * 20) {
            ++attempts;
            std::size_t n = 2 + rng.next_u64() % 5;
            std::size_t lo = 1 + rng.next_u64() % 3;
            std::size_t hi = lo + 1 + rng.next_u64() % 3;
            std::size_t mt_dim = kase == 0 ? lo : (kase == 1 ? hi : lo);
            std::size_t ms_dim = kase == 0 ? hi : (kase == 1 ? lo : lo);
            std::size_t count = 8 + rng.next_u64() % 33;
            MlpOneHidden f_t = random_mlp(rng, n, mt_dim);
            MlpOneHidden f_s = random_mlp(rng, n, ms_dim);
            MetricSpace mt = MetricSpace::from_psd(random_metric(rng, mt_dim));
            MetricSpace mss = MetricSpace::from_psd(random_metric(rng, ms_dim));
            Dataset data = gaussian_inputs(rng, count, n);
            ReversalBound b = direction_reversal_bound(f_t, mt, f_s, mss, data);
            if (b.skipped || (!b.has_low && !b.has_high)) continue;
            ++done;
            bool ok = (!b.has_low || b.low.holds) && (!b.has_high || b.high.holds);
            c.record(ok, "case " + std::to_string(kase) + " attempt " +
                             std::to_string(attempts) + ": lhs/rhs low " + fmt17(b.low.lhs) +
                             "/" + fmt17(b.low.rhs) + " high " + fmt17(b.high.lhs) + "/" +
                             fmt17(b.high.rhs));
        }
        if (done < per_case) {
            c.record(false, "case " + std::to_string(kase) + ": only " + std::to_string(done) +
                                " full-rank instances found");
        }
    }
    return finish("reversal-bound", c);
}

// Weighted operator norm is compatible with the euclidean vector norm.
SuiteResult suite_norm_compat(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t m = 1 + rng.next_u64() % 6;
        std::size_t k = 1 + rng.next_u64() % 6;
        MetricSpace ms = MetricSpace::from_psd(random_metric(rng, m));
        Matrix w = gaussian_matrix(rng, m, k);
        Vector v(k);
        for (double& x : v) x = rng.gaussian();
        double lhs = ms.norm_vec(matvec(w, v));
        double rhs = ms.norm_mat(w) * norm2(v);
        c.record(lhs <= rhs + 1e-9,
                 "trial " + std::to_string(trial) + ": " + fmt17(lhs) + " > " + fmt17(rhs));
    }
    return finish("norm-compat", c);
}

// Null directions of the source second moment annihilate the cross moment;
// checked on raw rank-deficient moment pairs and on models whose output
// layer has deficient rank.
SuiteResult suite_kernel_inclusion(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        if (trial % 2 == 0) {
            std::size_t n = 3 + rng.next_u64() % 4;
            std::size_t m1 = 1 + rng.next_u64() % 4;
            std::size_t m2 = 2 + rng.next_u64() % 4;
            std::size_t r = 1 + rng.next_u64() % (m2 - 1);
            std::size_t count = 5 + rng.next_u64() % 16;
            Matrix cspace = gaussian_matrix(rng, m2, r);
            Matrix p(m1, m2), j(m2, m2);
            for (std::size_t i = 0; i < count; ++i) {
                Matrix a = gaussian_matrix(rng, m1, n);
                Matrix b = matmul(cspace, gaussian_matrix(rng, r, n));
                p = add(p, matmul(a, transpose(b)));
                j = add(j, matmul(b, transpose(b)));
            }
            p = scale(p, 1.0 / static_cast<double>(count));
            j = scale(j, 1.0 / static_cast<double>(count));

            EigResult ej = sym_eig(j);
            double lead = std::max(ej.values[0], 0.0);
            double pnorm = frobenius(p);
            bool ok = true;
            std::string note;
            for (std::size_t k = 0; k < m2; ++k) {
                if (ej.values[k] > lead * 1e-12) continue;
                Vector vk(m2);
                for (std::size_t i = 0; i < m2; ++i) vk[i] = ej.vectors(i, k);
                double res = norm2(matvec(p, vk));
                if (res > 1e-8 * (1.0 + pnorm)) {
                    ok = false;
                    note = "trial " + std::to_string(trial) + ": residual " + fmt17(res);
                }
            }
            c.record(ok, note);
        } else {
            std::size_t n = 3 + rng.next_u64() % 4;
            std::size_t h = 3 + rng.next_u64() % 4;
            std::size_t m1 = 1 + rng.next_u64() % 4;
            std::size_t m2 = 2 + rng.next_u64() % 4;
            std::size_t r = 1 + rng.next_u64() % (m2 - 1);
            std::size_t count = 5 + rng.next_u64() % 16;
            MlpOneHidden f1 = random_mlp(rng, n, m1);
            Matrix w1 = gaussian_matrix(rng, h, n);
            Vector b1(h), b2(m2);
            for (double& x : b1) x = rng.gaussian();
            for (double& x : b2) x = rng.gaussian();
            Matrix w2 = matmul(gaussian_matrix(rng, m2, r), gaussian_matrix(rng, r, h));
            MlpOneHidden f2(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
            MetricSpace ms1 = MetricSpace::from_psd(random_metric(rng, m1));
            Dataset data = gaussian_inputs(rng, count, n);
            PairStats stats = pair_stats(f1, f2, ms1, data);
            c.record(stats.null_residual <= 1e-8 * (1.0 + frobenius(stats.p)),
                     "trial " + std::to_string(trial) + ": null residual " +
                         fmt17(stats.null_residual));
        }
    }
    return finish("kernel-inclusion", c);
}

// A full-column-rank affine map is undone exactly by its pseudoinverse, and
// approximate preimages are off by at most the conditioning constant times
// the output-side error.
SuiteResult suite_inverse_map(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t m = 1 + rng.next_u64() % 4;
        std::size_t d = m + rng.next_u64() % 4;
        Matrix w = gaussian_matrix(rng, d, m);
        SvdResult sw = svd(w);
        if (sw.sigma.back() <= sw.sigma.front() * 1e-6) continue;  // redraw, no trial recorded
        Vector b(d), v(m), target(d);
        for (double& x : b) x = rng.gaussian();
        for (double& x : v) x = rng.gaussian();
        for (double& x : target) x = rng.gaussian();
        MetricSpace ms = MetricSpace::from_psd(random_metric(rng, m));

        Matrix w_pinv = pinv(w);
        Vector image = matvec(w, v);
        for (std::size_t i = 0; i < d; ++i) image[i] += b[i];

        Vector back(d);
        for (std::size_t i = 0; i < d; ++i) back[i] = image[i] - b[i];
        Vector v_back = matvec(w_pinv, back);
        Vector diff(m);
        for (std::size_t i = 0; i < m; ++i) diff[i] = v_back[i] - v[i];
        bool exact_ok = norm2(diff) <= 1e-8 * (1.0 + norm2(v));

        Vector off(d);
        for (std::size_t i = 0; i < d; ++i) off[i] = target[i] - b[i];
        Vector v_hat = matvec(w_pinv, off);
        Vector err(m);
        for (std::size_t i = 0; i < m; ++i) err[i] = v[i] - v_hat[i];
        Matrix gram_inv = pinv(matmul(transpose(w), w));
        double constant = std::sqrt(frobenius(gram_inv) * frobenius(ms.h()));
        Vector resid(d);
        for (std::size_t i = 0; i < d; ++i) resid[i] = target[i] - image[i];
        bool bound_ok = ms.norm_vec(err) <= constant * norm2(resid) + 1e-9;

        c.record(exact_ok && bound_ok,
                 "trial " + std::to_string(trial) + ": exact " + fmt17(norm2(diff)) +
                     " bound lhs " + fmt17(ms.norm_vec(err)) + " rhs " +
                     fmt17(constant * norm2(resid)));
    }
    return finish("inverse-map", c);
}

// The four defining pseudoinverse identities, including forced
// rank-deficient inputs and rescaled ones.
SuiteResult suite_pinv(std::size_t trials, Rng rng) {
    TrialCounter c;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::size_t m = 1 + rng.next_u64() % 8;
        std::size_t k = 1 + rng.next_u64() % 8;
        Matrix a;
        if (trial % 3 == 0 && std::min(m, k) > 1) {
            std::size_t r = 1 + rng.next_u64() % (std::min(m, k) - 1);
            a = matmul(gaussian_matrix(rng, m, r), gaussian_matrix(rng, r, k));
        } else {
            a = gaussian_matrix(rng, m, k);
        }
        if (trial % 5 == 4) a = scale(a, 1e3);

        Matrix ap = pinv(a);
        double tol = 1e-8;
        Matrix aap = matmul(a, ap);
        Matrix apa = matmul(ap, a);
        double c1 = frobenius(sub(matmul(aap, a), a));
        double c2 = frobenius(sub(matmul(apa, ap), ap));
        double c3 = frobenius(sub(transpose(aap), aap));
        double c4 = frobenius(sub(transpose(apa), apa));
        bool ok = c1 <= tol * (1.0 + frobenius(a)) && c2 <= tol * (1.0 + frobenius(ap)) &&
                  c3 <= tol * (1.0 + frobenius(aap)) && c4 <= tol * (1.0 + frobenius(apa));
        c.record(ok, "trial " + std::to_string(trial) + ": residuals " + fmt17(c1) + " " +
                         fmt17(c2) + " " + fmt17(c3) + " " + fmt17(c4));
    }
    return finish("pinv", c);
}

struct SuiteSpec {
    const char* name;
    std::size_t default_trials;
    SuiteResult (*run)(std::size_t, Rng);
};

const SuiteSpec kSuites[] = {
    {"grad-identity", 200, suite_grad_identity},
    {"alpha2-pair", 100, suite_alpha2_pair},
    {"ranges", 1000, suite_ranges},
    {"alignment-range", 1000, suite_alignment_range},
    {"sign-example", 0, suite_sign_example},
    {"surrogate-bound", 100, suite_surrogate_bound},
    {"reversal-bound", 100, suite_reversal_bound},
    {"norm-compat", 500, suite_norm_compat},
    {"kernel-inclusion", 500, suite_kernel_inclusion},
    {"inverse-map", 500, suite_inverse_map},
    {"pinv", 1000, suite_pinv},
};

// Alternate spellings accepted by --only, kept for script compatibility.
std::string canonical_suite(const std::string& name) {
    static const std::pair<const char*, const char*> kAliases[] = {
        {"theorem1", "grad-identity"},   {"prop1", "alpha2-pair"},
        {"prop2", "ranges"},             {"prop3", "alignment-range"},
        {"theorem4", "surrogate-bound"}, {"theorem5", "reversal-bound"},
        {"lemma-e1", "norm-compat"},     {"lemma-e2", "kernel-inclusion"},
        {"lemma-e3", "inverse-map"},     {"appendix-a", "sign-example"},
    };
    for (const auto& [alias, target] : kAliases) {
        if (name == alias) return target;
    }
    return name;
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts, std::uint64_t seed) {
    std::string only;
    if (opts.appendix_a) {
        only = "sign-example";
    } else if (!opts.only.empty()) {
        only = canonical_suite(opts.only);
        bool known = false;
        for (const SuiteSpec& s : kSuites) known = known || only == s.name;
        if (!known) throw ConfigError("unknown verification suite: " + opts.only);
    }

    VerifyReport report;
    report.ok = true;
    for (std::size_t i = 0; i < std::size(kSuites); ++i) {
        const SuiteSpec& spec = kSuites[i];
        if (!only.empty() && only != spec.name) continue;
        std::size_t trials = opts.trials > 0 ? opts.trials : spec.default_trials;
        SuiteResult r = spec.run(trials, Rng(Rng::mix(seed, 0xabcd0000ull + i)));
        report.ok = report.ok && r.passed;
        report.suites.push_back(std::move(r));
    }
    if (report.suites.empty()) throw ConfigError("suite selection matched nothing");
    return report;
}

std::string verify_report_json(const VerifyReport& report) {
    json suites = json::array();
    for (const SuiteResult& s : report.suites) {
        suites.push_back({{"name", s.name},
                          {"trials", s.trials},
                          {"failures", s.failures},
                          {"passed", s.passed},
                          {"notes", s.notes}});
    }
    json root = {{"ok", report.ok}, {"suites", suites}};
    return root.dump(2) + "\n";
}

int cmd_verify(const RunConfig& cfg, const VerifyOptions& opts) {
    ensure_out_dir(cfg);
    VerifyReport report = run_verify(opts, cfg.verify_seed);
    for (const SuiteResult& s : report.suites) {
        std::printf("%-18s %s (%zu trials, %zu failures)\n", s.name.c_str(),
                    s.passed ? "pass" : "FAIL", s.trials, s.failures);
        for (const std::string& note : s.notes) std::printf("    %s\n", note.c_str());
    }
    const std::string path = out_path(cfg, "verify.json").string();
    write_text(path, verify_report_json(report));
    std::printf("report: %s\n", path.c_str());
    return report.ok ? 0 : 1;
}

double spearman(const Vector& a, const Vector& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw InvalidInput("rank correlation needs two equal-length series of >= 2 values");
    }
    auto ranks = [](const Vector& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        Vector r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
            i = j + 1;
        }
        return r;
    };
    Vector ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace xferlab
