#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "CLI11.hpp"
#include "lbrc.hpp"

namespace lbrc::cli {

namespace fs = std::filesystem;

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

// "jumps" or "n:<count>"; returns the count, 0 for jumps.
inline std::size_t parse_grid_flag(const std::string& spec) {
    if (spec == "jumps") return 0;
    if (spec.rfind("n:", 0) == 0) {
        const auto v = detail::parse_number(spec.substr(2));
        if (v && *v >= 1 && *v == std::floor(*v) && *v <= 1e7) return static_cast<std::size_t>(*v);
    }
    throw InputError("--grid: expected 'jumps' or 'n:<count>', got '" + spec + "'");
}

// Evenly spaced points over (0, max y].
inline std::vector<double> even_points(const Dataset& d, std::size_t count) {
    double hi = 0.0;
    for (const auto& o : d) hi = std::max(hi, o.y);
    std::vector<double> pts;
    for (std::size_t i = 1; i <= count; ++i) pts.push_back(hi * static_cast<double>(i) / static_cast<double>(count));
    return pts;
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
    std::string input;
    std::string estimator = "both";
    std::string grid = "jumps";
    std::string out = ".";
};

inline std::vector<std::string> cmd_estimate(const EstimateOptions& opt) {
    if (opt.estimator != "huang-qin" && opt.estimator != "tjw" && opt.estimator != "both")
        throw InputError("--estimator: expected huang-qin, tjw or both, got '" + opt.estimator + "'");
    const std::size_t count = parse_grid_flag(opt.grid);
    const std::string text = detail::read_file(opt.input);
    const Dataset d = [&] {
        try {
            return parse_dataset_text(text);
        } catch (const InputError& e) {
            throw InputError(opt.input + ": " + e.what());
        }
    }();
    const EstimatorBundle b = fit(d);
    const std::string hash =
        hex64(fnv1a64("estimate;estimator=" + opt.estimator + ";grid=" + opt.grid + ";data=" + hex64(fnv1a64(text))));
    const std::vector<double> extra = count == 0 ? std::vector<double>{} : even_points(d, count);

    std::vector<std::string> written;
    const auto emit = [&](const std::string& name, const std::vector<double>& jumps, auto&& f) {
        const fs::path path = fs::path(opt.out) / (name + ".csv");
        auto out = open_output(path);
        write_curve(out, make_curve(name, d.n(), hash, curve_points(jumps, extra), f), name);
        written.push_back(path.string());
    };
    if (opt.estimator != "tjw") {
        emit("f_tilde", b.f_tilde.jump_times(), [&](double t) { return b.f_tilde(t); });
        emit("f_bar", b.f_bar.jump_times(), [&](double t) { return b.f_bar(t); });
        emit("s_a_tilde", b.s_a_tilde.jump_times(), [&](double t) { return b.s_a_tilde(t); });
        emit("lambda_tilde", b.lambda_tilde.jump_times(), [&](double t) { return b.lambda_tilde(t); });
    }
    if (opt.estimator != "huang-qin") emit("f_tjw", b.f_tjw.jump_times(), [&](double t) { return b.f_tjw(t); });
    return written;
}

// ---------------------------------------------------------------- simulate

struct ModelOptions {
    std::string family = "exponential";
    double rate = 1.0;
    double shape = 1.0;
    double scale = 1.0;
    std::string censor_rate = "0.5";
};

inline TruthModel make_model(const ModelOptions& m, const std::string& key_prefix = "--") {
    std::optional<double> censor;
    if (m.censor_rate != "none") {
        const auto v = detail::parse_number(m.censor_rate);
        if (!v) throw InputError(key_prefix + "censor-rate: expected a number or 'none', got '" + m.censor_rate + "'");
        censor = *v;
    }
    try {
        if (m.family == "exponential") return TruthModel::exponential(m.rate, censor);
        if (m.family == "weibull") return TruthModel::weibull(m.shape, m.scale, censor);
    } catch (const InputError& e) {
        throw InputError(key_prefix + "family " + m.family + ": " + e.what());
    }
    throw InputError(key_prefix + "family: expected exponential or weibull, got '" + m.family + "'");
}

struct SimulateOptions {
    ModelOptions model;
    std::size_t n = 100;
    std::uint64_t seed = 1;
    std::string out;  // empty: standard output
};

inline void cmd_simulate(const SimulateOptions& opt, std::ostream& stdout_stream) {
    if (opt.n == 0) throw InputError("--n: must be >= 1");
    const TruthModel model = make_model(opt.model);
    const Dataset d = sample_lbrc(model, opt.n, opt.seed);
    if (opt.out.empty()) {
        write_dataset(stdout_stream, d);
    } else {
        auto out = open_output(opt.out);
        write_dataset(out, d);
    }
}

// ---------------------------------------------------------------- rate-experiment

struct ExperimentConfig {
    ModelOptions model;
    RateConfig rate;
    std::string grid = "f-quantiles:25:0.1:0.9";
    std::string out;
};

namespace detail {

inline double config_number(const std::string& key, const std::string& value) {
    const auto v = lbrc::detail::parse_number(value);
    if (!v) throw InputError("config key '" + key + "': cannot parse '" + value + "' as a number");
    return *v;
}

inline std::uint64_t config_count(const std::string& key, const std::string& value) {
    const double v = config_number(key, value);
    if (v < 0 || v != std::floor(v) || v > 1.8e19)
        throw InputError("config key '" + key + "': expected a nonnegative integer, got '" + value + "'");
    return static_cast<std::uint64_t>(v);
}

inline std::vector<std::size_t> config_sizes(const std::string& value) {
    std::string s = value;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }), s.end());
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw InputError("config key 'sizes': empty entry in '" + value + "'");
        out.push_back(static_cast<std::size_t>(config_count("sizes", item)));
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.rate.sizes = {250, 500, 1000, 2000, 4000};
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "family") cfg.model.family = value;
        else if (key == "rate") cfg.model.rate = detail::config_number(key, value);
        else if (key == "shape") cfg.model.shape = detail::config_number(key, value);
        else if (key == "scale") cfg.model.scale = detail::config_number(key, value);
        else if (key == "censor_rate") cfg.model.censor_rate = value;
        else if (key == "sizes") cfg.rate.sizes = detail::config_sizes(value);
        else if (key == "reps") cfg.rate.reps = detail::config_count(key, value);
        else if (key == "which") {
            try {
                cfg.rate.which = parse_rate_target(value);
            } catch (const InputError& e) {
                throw InputError("config key 'which': " + std::string(e.what()));
            }
        } else if (key == "grid") cfg.grid = value;
        else if (key == "seed") cfg.rate.seed = detail::config_count(key, value);
        else if (key == "threads") cfg.rate.threads = static_cast<unsigned>(detail::config_count(key, value));
        else if (key == "divergence_cap") cfg.rate.divergence_cap = detail::config_number(key, value);
        else if (key == "out") cfg.out = value;
        else throw InputError("config key '" + key + "': unknown key");
    }
    return cfg;
}

// "f-quantiles:<count>:<low>:<high>" (levels of F) or
// "h-quantiles:<count>:<low>:<high>" (levels of H, the law of Y).
inline EvalGrid make_experiment_grid(const TruthModel& model, const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4 || (parts[0] != "f-quantiles" && parts[0] != "h-quantiles"))
        throw InputError("config key 'grid': expected f-quantiles:<count>:<low>:<high> or h-quantiles:..., got '" +
                         spec + "'");
    const auto count = detail::config_count("grid", parts[1]);
    const double lo = detail::config_number("grid", parts[2]);
    const double hi = detail::config_number("grid", parts[3]);
    if (count == 0 || !(lo > 0.0 && lo <= hi && hi < 1.0))
        throw InputError("config key 'grid': need count >= 1 and 0 < low <= high < 1");
    if (parts[0] == "f-quantiles") return model.quantile_grid(count, lo, hi);
    std::vector<double> pts;
    for (std::size_t i = 0; i < count; ++i) {
        const double p = count == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        pts.push_back(model.quantile_h(p));
    }
    return EvalGrid::make(std::move(pts));
}

inline void write_rate_report(std::ostream& out, const RateReport& r) {
    out << "# which: " << to_string(r.which) << '\n';
    if (!r.convention.empty()) out << "# convention: " << r.convention << '\n';
    out << "# target_exponent: " << format_double(r.target_exponent) << '\n';
    out << "# slope: " << format_double(r.slope) << '\n';
    if (r.alternative_slope) out << "# alternative_slope: " << format_double(*r.alternative_slope) << '\n';
    for (std::size_t i = 0; i < r.sample_sizes.size(); ++i)
        out << "# median n=" << r.sample_sizes[i] << ": " << format_double(r.medians[i]) << '\n';
    out << "n,rep,sup_residual\n";
    for (std::size_t i = 0; i < r.sample_sizes.size(); ++i)
        for (std::size_t k = 0; k < r.sup_residuals[i].size(); ++k)
            out << r.sample_sizes[i] << ',' << k << ',' << format_double(r.sup_residuals[i][k]) << '\n';
}

inline std::string rate_summary(const RateReport& r) {
    std::ostringstream s;
    s << "which=" << to_string(r.which);
    if (!r.convention.empty()) s << " convention=" << r.convention;
    char buf[96];
    std::snprintf(buf, sizeof buf, " slope=%.4f target=%.2f", r.slope, r.target_exponent);
    s << buf;
    if (r.alternative_slope) {
        std::snprintf(buf, sizeof buf, " alternative_slope=%.4f", *r.alternative_slope);
        s << buf;
    }
    s << '\n';
    for (std::size_t i = 0; i < r.sample_sizes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  n=%zu median_sup=%.6g\n", r.sample_sizes[i], r.medians[i]);
        s << buf;
    }
    return s.str();
}

inline RateReport cmd_rate_experiment(const std::string& config_path, std::optional<unsigned> threads,
                                      const std::string& out_override, std::ostream& stdout_stream) {
    ExperimentConfig cfg = parse_experiment_config(lbrc::detail::read_file(config_path));
    if (threads) cfg.rate.threads = *threads;
    if (!out_override.empty()) cfg.out = out_override;
    const TruthModel model = make_model(cfg.model, "config key ");
    const EvalGrid grid = make_experiment_grid(model, cfg.grid);
    const RateReport report = rate_experiment(model, cfg.rate, grid);
    if (!cfg.out.empty()) {
        auto out = open_output(cfg.out);
        write_rate_report(out, report);
    }
    stdout_stream << rate_summary(report);
    return report;
}

// ---------------------------------------------------------------- influence

struct InfluenceOptions {
    std::string input;
    double level = 0.95;
    std::string grid = "jumps";
    std::string out;  // empty: standard output
};

inline void cmd_influence(const InfluenceOptions& opt, std::ostream& stdout_stream) {
    if (!(opt.level > 0.0 && opt.level < 1.0))
        throw InputError("--level: must lie in (0, 1), got " + format_double(opt.level));
    const std::size_t count = parse_grid_flag(opt.grid);
    const Dataset d = parse_dataset(opt.input);
    const PluginContext ctx(d);
    const auto& b = ctx.bundle();

    std::vector<double> pts;
    if (count == 0) {
        pts = b.f_tilde.jump_times();
        if (pts.empty()) pts = even_points(d, 1);
    } else {
        pts = even_points(d, count);
    }
    const EvalGrid grid = EvalGrid::make(pts, 0.0, pts.back());
    const auto var = plugin_variance(d, grid);
    const auto lil = lil_quantities(ctx, grid);
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + opt.level / 2.0);

    std::ofstream file;
    std::ostream* out = &stdout_stream;
    if (!opt.out.empty()) {
        file = open_output(opt.out);
        out = &file;
    }
    *out << "# estimator: f_tilde\n# n: " << d.n() << "\n# level: " << format_double(opt.level) << '\n';
    *out << "t,f_tilde,se,ci_low,ci_high,d,v,v_alt\n";
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        const double t = grid.points[g];
        const double f = b.f_tilde(t);
        const double se = std::sqrt(var[g]);
        const double lo = std::clamp(f - z * se, 0.0, 1.0);
        const double hi = std::clamp(f + z * se, 0.0, 1.0);
        *out << format_double(t) << ',' << format_double(f) << ',' << format_double(se) << ',' << format_double(lo)
             << ',' << format_double(hi) << ',' << format_double(lil.d[g]) << ',' << format_double(lil.v[g]) << ','
             << format_double(lil.v_squared_factor[g]) << '\n';
    }
}

// ---------------------------------------------------------------- entry point

// Parses argv and runs one command. Exit codes: 0 success, 1 bad input,
// 2 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Product-limit estimation for length-biased right-censored survival data", "lbrc"};
    app.require_subcommand(1);

    EstimateOptions est;
    auto* c_est = app.add_subcommand("estimate", "Fit the estimators and write curve CSVs");
    c_est->add_option("input", est.input, "CSV with columns a,v,delta (or a,y,delta)")->required();
    c_est->add_option("--estimator", est.estimator, "huang-qin, tjw or both")->capture_default_str();
    c_est->add_option("--grid", est.grid, "jumps, or n:<count> extra evenly spaced points")->capture_default_str();
    c_est->add_option("--out", est.out, "Output directory")->capture_default_str();

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Draw a length-biased right-censored dataset");
    c_sim->add_option("--family", sim.model.family, "exponential or weibull")->capture_default_str();
    c_sim->add_option("--rate", sim.model.rate, "Exponential rate")->capture_default_str();
    c_sim->add_option("--shape", sim.model.shape, "Weibull shape")->capture_default_str();
    c_sim->add_option("--scale", sim.model.scale, "Weibull scale")->capture_default_str();
    c_sim->add_option("--censor-rate", sim.model.censor_rate, "Residual censoring rate, or none")
        ->capture_default_str();
    c_sim->add_option("--n", sim.n, "Sample size")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    c_sim->add_option("--out", sim.out, "Output CSV (default: standard output)");

    std::string config_path;
    std::string rate_out;
    unsigned threads = 0;
    auto* c_rate = app.add_subcommand("rate-experiment", "Run a remainder-rate experiment from a key=value config");
    c_rate->add_option("config", config_path, "Config file")->required();
    auto* threads_opt = c_rate->add_option("--threads", threads, "Worker threads (default: config, else all cores)");
    c_rate->add_option("--out", rate_out, "Report CSV (overrides the config's out key)");

    InfluenceOptions inf;
    auto* c_inf = app.add_subcommand("influence", "Pointwise standard errors, CIs and LIL scale of F~");
    c_inf->add_option("input", inf.input, "CSV with columns a,v,delta (or a,y,delta)")->required();
    c_inf->add_option("--level", inf.level, "Confidence level")->capture_default_str();
    c_inf->add_option("--grid", inf.grid, "jumps, or n:<count> evenly spaced points")->capture_default_str();
    c_inf->add_option("--out", inf.out, "Output CSV (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*c_est) {
            for (const auto& p : cmd_estimate(est)) out << p << '\n';
        } else if (*c_sim) {
            cmd_simulate(sim, out);
        } else if (*c_rate) {
            std::optional<unsigned> t;
            if (*threads_opt) t = threads;
            cmd_rate_experiment(config_path, t, rate_out, out);
        } else if (*c_inf) {
            cmd_influence(inf, out);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace lbrc::cli
