// musicking-lab: validate, analyze, compare and cluster music-performance
// session recordings. Data goes to files under --out; logs go to stderr.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <musicking/musicking.hpp>

namespace {

using musicking::pipeline::RunConfig;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> dataset;
    std::optional<std::string> grid;
    std::optional<std::string> out;
    std::optional<std::string> session;
    std::string column = "eda";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> k_range;
    std::optional<double> window_seconds;
    std::optional<double> confidence_threshold;
    std::optional<double> iqr_k;
    std::optional<double> offset_ms;
    std::optional<int> chorus;
    std::optional<std::size_t> top_n;
    std::optional<std::size_t> jobs;
    bool include_nonperformance = false;
    bool svg = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "Flat key=value config file");
    cmd->add_option("--dataset", f.dataset, "Directory of session .json files (default: $MUSICKING_DATASET)");
    cmd->add_option("--out", f.out, "Output directory (default: out)");
    cmd->add_option("--confidence-threshold", f.confidence_threshold, "Keypoint confidence cutoff (default 0.5)");
    cmd->add_option("--iqr-k", f.iqr_k, "IQR fence multiplier (default 1.5)");
    cmd->add_option("--jobs", f.jobs, "Worker threads (default: available parallelism)");
    cmd->add_flag("--include-nonperformance", f.include_nonperformance,
                  "Keep chorus 0 / 999 records in per-bar and cross-session analysis");
}

RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (const char* env = std::getenv(musicking::pipeline::kDatasetEnvVar)) {
        cfg.dataset_dir = env;
    }
    if (f.config) {
        musicking::pipeline::apply_config(cfg,
                                          musicking::pipeline::parse_config_text(musicking::read_file(*f.config)));
    }
    if (f.dataset) cfg.dataset_dir = *f.dataset;
    if (f.grid) cfg.beat_grid_path = *f.grid;
    if (f.out) cfg.output_dir = *f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.k_range) std::tie(cfg.k_min, cfg.k_max) = musicking::pipeline::parse_k_range(*f.k_range);
    if (f.window_seconds) cfg.window_seconds = *f.window_seconds;
    if (f.confidence_threshold) cfg.confidence_threshold = *f.confidence_threshold;
    if (f.iqr_k) cfg.iqr_k = *f.iqr_k;
    if (f.offset_ms) cfg.offset_ms = *f.offset_ms;
    if (f.chorus) cfg.chorus = *f.chorus;
    if (f.top_n) cfg.top_n = *f.top_n;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (f.include_nonperformance) cfg.exclude_nonperformance = false;
    if (f.svg) cfg.svg = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal music-performance session analytics"};
    app.name("musicking-lab");
    app.require_subcommand(1);

    Flags f;
    auto* validate = app.add_subcommand("validate", "Integrity and quality audit of every session");
    add_common(validate, f);

    auto* analyze = app.add_subcommand("analyze", "Single-session report bundle");
    add_common(analyze, f);
    analyze->add_option("--session", f.session, "Session id (file stem)")->required();
    analyze->add_option("--window-seconds", f.window_seconds, "Rolling window length (default 10)");
    analyze->add_flag("--svg", f.svg, "Also render SVG figures");

    auto* compare = app.add_subcommand("compare", "Cross-session EDA comparison and ANOVA");
    add_common(compare, f);
    compare->add_option("--top", f.top_n, "Sessions listed by |EDA-flow correlation| (default 5)");

    auto* cluster = app.add_subcommand("cluster", "Per-bar k-means clustering of one column");
    add_common(cluster, f);
    cluster->add_option("--session", f.session, "Session id (file stem)")->required();
    cluster->add_option("--grid", f.grid, "Beat grid .json file");
    cluster->add_option("--column", f.column, "Column to aggregate per bar (default eda)");
    cluster->add_option("--seed", f.seed, "Random seed (default 0)");
    cluster->add_option("--k-range", f.k_range, "Candidate cluster counts, e.g. 2..8");
    cluster->add_option("--offset-ms", f.offset_ms, "Shift from backing_track_position to audio time");
    cluster->add_option("--chorus", f.chorus, "Cluster bars of one chorus only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : musicking::pipeline::kExitError;
    }

    RunConfig cfg;
    try {
        cfg = resolve(f);
    } catch (const musicking::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return musicking::pipeline::kExitError;
    }

    if (validate->parsed()) return musicking::pipeline::cmd_validate(cfg, std::cerr);
    if (analyze->parsed()) return musicking::pipeline::cmd_analyze(cfg, *f.session, std::cerr);
    if (compare->parsed()) return musicking::pipeline::cmd_compare(cfg, std::cerr);
    return musicking::pipeline::cmd_cluster(cfg, *f.session, f.column, std::cerr);
}
