// holdstab: synthesize or ingest grasp datasets, train and evaluate stability
// classifiers, and render result tables.
//
// Configuration precedence: command-line flags > --config file > built-in
// defaults. The resolved configuration is written next to every artifact.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "holdstab/core/dataset_io.hpp"
#include "holdstab/core/error.hpp"
#include "holdstab/core/ingest.hpp"
#include "holdstab/core/parallel.hpp"
#include "holdstab/eval/experiment.hpp"
#include "holdstab/eval/metrics.hpp"
#include "holdstab/eval/report.hpp"
#include "holdstab/simulate/catalog.hpp"
#include "holdstab/simulate/simulator.hpp"
#include "workspace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace holdstab;
using namespace holdstab::cli;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Globals {
    std::string config_file;
    std::string data;
    int threads = 0;
    CLI::Option* config_opt = nullptr;
    CLI::Option* data_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

/// Flags the user actually typed, as a merge patch.
class Overrides {
public:
    template <class T>
    void add(CLI::Option* opt, const json::json_pointer& where, const T& value) {
        if (opt && opt->count() > 0) patch_[where] = value;
    }
    void set(const json::json_pointer& where, json value) { patch_[where] = std::move(value); }
    json patch() const { return patch_.is_null() ? json::object() : patch_; }

private:
    json patch_;
};

json resolve(const Globals& g, Overrides& o) {
    o.add(g.data_opt, "/data_root"_json_pointer, g.data);
    o.add(g.threads_opt, "/threads"_json_pointer, g.threads);
    std::optional<fs::path> file;
    if (g.config_opt->count() > 0) file = g.config_file;
    auto cfg = resolve_config(file, o.patch());
    set_threads(cfg.value("threads", 0));
    return cfg;
}

/// Records where the data came from even when it was found through the environment.
json with_data_root(json cfg, const fs::path& root) {
    cfg["data_root"] = fs::absolute(root).string();
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

struct Banks {
    std::optional<FeatureBank> pose;
    std::optional<FeatureBank> release;

    ExperimentData data() const { return {pose ? &*pose : nullptr, release ? &*release : nullptr}; }
};

Banks load_banks(const fs::path& root, const json& cfg, bool need_release) {
    Banks b;
    b.pose = load_or_extract(root, cfg, Span::GraspToPoseEnd, &std::cerr);
    if (need_release) b.release = load_or_extract(root, cfg, Span::GraspToReleaseEnd, &std::cerr);
    return b;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const json& cfg) {
    const auto root = data_root(cfg);
    const auto& s = cfg.at("synth");
    const auto seed = s.at("seed").get<std::uint64_t>();
    const auto sim = SimConfig::from_json(s.at("sim"));
    sim.validate();

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ObjectSpec> catalog;
    if (s.contains("catalog") && s["catalog"].is_string()) {
        catalog = load_catalog(s["catalog"].get<std::string>());
    } else {
        const int n = s.at("objects").get<int>();
        if (n <= 0) throw ConfigError("synth.objects must be positive");
        catalog = generate_catalog(n, seed);
    }
    const auto objects = catalog.size();
    synthesize_to_directory(catalog, sim, seed, root);
    write_json(root / "synth_config.json", with_data_root(cfg, root));

    const auto stats = dataset_statistics(load_dataset(root, LoadMode::MetadataOnly));
    std::cout << "wrote " << stats.cycles << " cycles of " << objects << " objects to " << root.string() << " in "
              << seconds_since(t0) << " s\n"
              << format_statistics_table(stats);
    return kOk;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const json& cfg, const std::string& source, const std::string& mapping_file) {
    const auto root = data_root(cfg);
    const auto mapping = mapping_file.empty() ? IngestMapping{} : IngestMapping::from_json(read_json(mapping_file));
    IngestReport report;
    const auto d = ingest_release(source, mapping, &report);
    save_dataset(d, root);
    write_json(root / "ingest_report.json", {{"source", fs::absolute(source).string()},
                                             {"cycles", report.cycles},
                                             {"with_streams", report.with_streams},
                                             {"skipped", report.skipped},
                                             {"mapping", mapping.to_json()}});
    std::cout << "ingested " << report.cycles << " cycles (" << report.with_streams << " with sensor streams) into "
              << root.string() << "\n";
    if (!report.skipped.empty()) {
        std::cout << report.skipped.size() << " directories skipped:\n";
        for (const auto& s : report.skipped) std::cout << "  " << s << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const json& cfg, const std::string& format, const std::string& out) {
    const auto root = data_root(cfg);
    const auto d = load_dataset(root, LoadMode::MetadataOnly);
    if (d.cycles.empty()) throw DataError("dataset at '" + root.string() + "' has no cycles");
    check_unique_ids(d);
    const auto stats = dataset_statistics(d);

    std::string text;
    if (format == "table") {
        text = format_statistics_table(stats);
    } else if (format == "csv") {
        text = format_statistics_csv(stats);
    } else if (format == "json") {
        text = stats.to_json().dump(2) + "\n";
    } else {
        throw ConfigError("unknown stats format '" + format + "' (table, csv or json)");
    }
    if (out.empty())
        std::cout << text;
    else
        write_text(out, text);

    // Synthetic datasets carry the generator's own tally; say whether it agrees.
    if (d.metadata.contains("ground_truth")) {
        const auto& truth = d.metadata["ground_truth"].at("label_counts");
        const auto mine = stats.to_json();
        bool match = true;
        for (auto p : kPhases) {
            const std::string name(to_string(p));
            for (const char* l : {"pass", "slip", "drop", "not_present"})
                match = match && truth.at(name).value(l, 0) == mine.at(name).at(l).get<int>();
        }
        std::cerr << "generator ground truth: " << (match ? "match" : "MISMATCH") << "\n";
        if (!match) return kData;
    }
    return kOk;
}

// ---------------------------------------------------------------- train / eval

int cmd_train(const json& cfg_in, const std::string& out) {
    const auto root = data_root(cfg_in);
    const auto cfg = with_data_root(cfg_in, root);
    const auto protocol = parse_protocol(cfg.at("split").at("protocol").get<std::string>());
    const auto variant = parse_variant(cfg.at("model").at("variant").get<std::string>());
    const auto modalities = parse_modalities(cfg.at("model").at("modalities").get<std::string>());
    const auto opts = variant_options(cfg, protocol);

    const auto banks = load_banks(root, cfg, variant == Variant::LstmWc);
    const auto data = banks.data();
    const auto keys = data.keys();
    const auto manifest = make_manifest(keys, protocol, protocol_params(cfg), cfg.at("split").at("index").get<std::size_t>(),
                                        cfg.at("split").at("seed").get<std::uint64_t>());

    json resolved = cfg;
    resolved["train"] = opts.train.to_json();
    const fs::path dir = out;
    fs::create_directories(dir);
    std::ofstream log(dir / "train_log.jsonl");
    const auto t0 = std::chrono::steady_clock::now();
    const auto fm = fit_variant(data, variant, modalities, manifest, opts, Exec::Parallel, &log);
    save_run(dir, fm, manifest, resolved);

    std::cout << to_string(variant) << " " << to_string(modalities) << " on " << to_string(protocol) << ": "
              << manifest.train.size() << " train / " << manifest.val.size() << " val / " << manifest.test.size()
              << " test cycles, " << seconds_since(t0) << " s\n";
    if (fm.training)
        std::cout << "best validation accuracy " << pct(fm.training->best_val_accuracy) << " at iteration "
                  << fm.training->best_iteration << (variant == Variant::LstmDrs ? ", sigma " + std::to_string(fm.sigma) : "")
                  << "\n";
    else
        std::cout << "majority label " << to_string(fm.majority) << "\n";
    std::cout << "run saved to " << dir.string() << "\n";
    return kOk;
}

/// A results row on stdout, and appended to `out` when given (header written once).
void emit_result(const RunResult& r, const std::string& out) {
    std::cout << to_string(r.variant) << " " << to_string(r.modalities) << " on " << to_string(r.protocol)
              << ": test accuracy " << pct(r.metrics.accuracy) << " on " << r.metrics.n << " cycles";
    if (r.metrics.n_sneq) std::cout << "; " << pct(r.metrics.accuracy_on_sneq) << " on " << r.metrics.n_sneq << " S-neq cycles";
    std::cout << "\nconfusion [actual][predicted] stable/not: " << json(r.metrics.confusion).dump() << "\n";
    write_results_header(std::cout);
    write_result_row(std::cout, r);
    if (out.empty()) return;
    const bool fresh = !fs::exists(out) || fs::file_size(out) == 0;
    std::ofstream f(out, std::ios::app);
    if (fresh) write_results_header(f);
    write_result_row(f, r);
    if (!f) throw DataError("cannot write '" + out + "'");
}

/// Scores a run directory written by train.
int cmd_eval_run(const Globals& g, const std::string& run, const std::string& out) {
    const fs::path dir = run;
    auto cfg = read_json(dir / "config.json");
    if (g.data_opt->count() > 0) cfg["data_root"] = g.data;
    set_threads(g.threads_opt->count() > 0 ? g.threads : cfg.value("threads", 0));
    const auto root = data_root(cfg);
    const auto manifest = SplitManifest::load(dir / "manifest.json");
    const auto fitted = read_json(dir / "fitted.json");
    const auto variant = parse_variant(fitted.at("variant").get<std::string>());

    const auto banks = load_banks(root, cfg, variant == Variant::LstmWc);
    const auto& bank = variant == Variant::LstmWc ? *banks.release : *banks.pose;
    const auto fm = load_run(dir, bank.layout);

    std::vector<const FeatureSequence*> test;
    for (const auto& id : manifest.test) test.push_back(&bank.sequences[bank.find(id)]);
    RunResult r;
    r.protocol = manifest.protocol;
    r.variant = variant;
    r.modalities = fm.modalities;
    r.seed = cfg.at("train").value("seed", std::uint64_t{0});
    r.split_seed = manifest.seed;
    r.metrics = evaluate([&fm](std::span<const FeatureSequence* const> xs) { return fm.predict(xs); }, test);
    write_json(dir / "metrics.json", {{"metrics", r.metrics.to_json()}, {"config", cfg}, {"fitted", fm.describe()}});
    emit_result(r, out);
    return kOk;
}

/// Trains and scores one (protocol, variant, modalities, split, seed) without keeping the model.
int cmd_eval_fresh(const json& cfg_in, const std::string& out) {
    const auto root = data_root(cfg_in);
    const auto cfg = with_data_root(cfg_in, root);
    const auto protocol = parse_protocol(cfg.at("split").at("protocol").get<std::string>());
    const auto variant = parse_variant(cfg.at("model").at("variant").get<std::string>());
    const auto modalities = parse_modalities(cfg.at("model").at("modalities").get<std::string>());
    const auto opts = variant_options(cfg, protocol);

    const auto banks = load_banks(root, cfg, variant == Variant::LstmWc);
    const auto data = banks.data();
    const auto manifest = make_manifest(data.keys(), protocol, protocol_params(cfg),
                                        cfg.at("split").at("index").get<std::size_t>(),
                                        cfg.at("split").at("seed").get<std::uint64_t>());
    const auto r = run_single(data, variant, modalities, manifest, opts);
    emit_result(r, out);
    return kOk;
}

// ---------------------------------------------------------------- sweep / report

/// Protocol grid of the published tables: unseen-pose protocols compare LSTM
/// with LSTM+DRS; unseen objects add the baselines and the ceiling.
json paper_tables_plan() {
    const json pose_variants = {"lstm", "lstm-drs"};
    json objects_variants = json::array();
    for (auto v : kAllVariants) objects_variants.push_back(to_string(v));
    const json five = {0, 1, 2, 3, 4};
    return json::array({
        {{"protocol", "uniform"}, {"variants", pose_variants}, {"repeats", 15}, {"seeds", {0}}},
        {{"protocol", "random-poses"}, {"variants", pose_variants}, {"repeats", 15}, {"seeds", {0}}},
        {{"protocol", "pose-group"}, {"variants", pose_variants}, {"repeats", 3}, {"seeds", five}},
        {{"protocol", "unseen-objects"}, {"variants", objects_variants}, {"repeats", 20}, {"seeds", five}},
    });
}

json preset_plan(const std::string& name) {
    if (name == "paper-tables") return paper_tables_plan();
    throw ConfigError("unknown sweep preset '" + name + "' (paper-tables)");
}

struct PlanEntry {
    Protocol protocol;
    std::vector<Variant> variants;
    int repeats = 1;
    std::vector<std::uint64_t> seeds;
};

/// sweep.plan when present, otherwise one entry per protocol from the flat fields.
std::vector<PlanEntry> sweep_plan(const json& s) {
    std::vector<PlanEntry> plan;
    auto entry = [](const json& e, const json& fallback) {
        PlanEntry p;
        p.protocol = parse_protocol(e.at("protocol").get<std::string>());
        for (const auto& v : e.value("variants", fallback.at("variants"))) p.variants.push_back(parse_variant(v.get<std::string>()));
        p.repeats = e.value("repeats", fallback.at("repeats").get<int>());
        p.seeds = e.value("seeds", fallback.at("seeds")).get<std::vector<std::uint64_t>>();
        if (p.variants.empty()) throw ConfigError("sweep entry for " + std::string(to_string(p.protocol)) + " has no variants");
        if (p.seeds.empty()) throw ConfigError("sweep entry for " + std::string(to_string(p.protocol)) + " has no seeds");
        return p;
    };
    if (s.contains("plan") && s["plan"].is_array()) {
        for (const auto& e : s["plan"]) plan.push_back(entry(e, s));
    } else {
        for (const auto& p : s.at("protocols")) plan.push_back(entry({{"protocol", p}}, s));
    }
    if (plan.empty()) throw ConfigError("sweep has no protocols");
    return plan;
}

std::string report_text(const std::vector<RunResult>& results) {
    std::set<Variant> pose_variants;
    bool objects = false;
    for (const auto& r : results) {
        if (r.protocol == Protocol::UnseenObjects)
            objects = true;
        else
            pose_variants.insert(r.variant);
    }
    std::string text;
    for (auto v : pose_variants)
        text += format_pose_table(results, v) + "\n" + format_pose_table(results, v, Score::AccuracyOnSneq) + "\n";
    if (objects)
        text += format_object_table(results) + "\n" + format_object_table(results, Score::AccuracyOnSneq) + "\n";
    text += format_deltas(results);
    return text;
}

/// tables.txt, summary.csv and one bar chart per table family.
void write_report(const std::vector<RunResult>& results, const fs::path& dir) {
    write_text(dir / "tables.txt", report_text(results));
    write_text(dir / "summary.csv", format_summary_csv(results));
    std::set<Variant> pose_variants;
    bool objects = false;
    for (const auto& r : results) {
        if (r.protocol == Protocol::UnseenObjects)
            objects = true;
        else
            pose_variants.insert(r.variant);
    }
    if (!pose_variants.empty()) {
        const auto v = pose_variants.count(Variant::LstmDrs) ? Variant::LstmDrs : *pose_variants.begin();
        write_text(dir / "unseen_poses.svg", pose_chart_svg(results, v));
    }
    if (objects) write_text(dir / "unseen_objects.svg", object_chart_svg(results));
}

int cmd_sweep(const json& cfg_in, const std::string& out) {
    const auto root = data_root(cfg_in);
    const auto cfg = with_data_root(cfg_in, root);
    const auto& s = cfg.at("sweep");
    const auto plan = sweep_plan(s);
    std::vector<Modalities> mods;
    for (const auto& m : s.at("modalities")) mods.push_back(parse_modalities(m.get<std::string>()));
    if (mods.empty()) throw ConfigError("sweep needs at least one modality set");

    bool need_release = false;
    for (const auto& e : plan)
        for (auto v : e.variants) need_release = need_release || v == Variant::LstmWc;
    const auto banks = load_banks(root, cfg, need_release);
    const auto data = banks.data();

    const fs::path dir = out;
    fs::create_directories(dir / "manifests");
    json resolved = cfg;
    for (const auto& e : plan)
        resolved["train_by_protocol"][std::string(to_string(e.protocol))] = train_config(cfg, e.protocol).to_json();
    write_json(dir / "config.json", resolved);

    // Rows are flushed as runs finish so an interrupted sweep keeps its results.
    std::ofstream runs(dir / "runs.jsonl");
    std::ofstream csv(dir / "results.csv");
    write_results_header(csv);
    std::vector<RunResult> all;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& e : plan) {
        std::set<std::size_t> saved;
        for (auto variant : e.variants)
            for (auto m : mods) {
                ExperimentSpec spec;
                spec.protocol = e.protocol;
                spec.variant = variant;
                spec.modalities = m;
                spec.repeats = e.repeats;
                spec.split_seed_base = cfg.at("split").at("seed").get<std::uint64_t>();
                spec.seeds = e.seeds;
                spec.options = variant_options(cfg, e.protocol);
                spec.params = protocol_params(cfg);

                RunHooks hooks;
                hooks.on_manifest = [&](const SplitManifest& man, std::size_t i) {
                    if (saved.insert(i).second)
                        man.save(dir / "manifests" / (std::string(to_string(e.protocol)) + "-" + std::to_string(i) + ".json"));
                };
                hooks.on_result = [&](const RunResult& r) {
                    runs << r.to_json().dump() << "\n";
                    runs.flush();
                };
                const auto results = run_experiment(data, spec, Exec::Parallel, &hooks);
                for (const auto& r : results) write_result_row(csv, r);
                csv.flush();
                if (!csv) throw DataError("cannot write '" + (dir / "results.csv").string() + "'");
                all.insert(all.end(), results.begin(), results.end());
                std::cout << to_string(e.protocol) << " " << to_string(variant) << " " << to_string(m) << ": "
                          << format_cell(cell(results, e.protocol, variant, m)) << " (" << results.size() << " runs, "
                          << seconds_since(t0) << " s elapsed)\n";
            }
    }
    write_report(all, dir);
    std::cout << "results: " << (dir / "results.csv").string() << "\nreport: " << (dir / "tables.txt").string() << "\n";
    return kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<RunResult> results;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read '" + path + "'");
        auto r = read_results_csv(in);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (results.empty()) throw DataError("no results to report");
    std::cout << report_text(results);
    if (!out.empty()) {
        write_report(results, out);
        std::cerr << "report written to " << out << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grasp stability datasets, classifiers and evaluation protocols"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    g.config_opt = app.add_option("--config", g.config_file, "JSON config; flags override it")->check(CLI::ExistingFile);
    g.data_opt = app.add_option("--data", g.data, std::string("Dataset root (default $") + kDataRootEnv + ")");
    g.threads_opt = app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)");

    Overrides ov;
    std::string out, source, mapping, format = "table", run;
    std::vector<std::string> results_in;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset into the data root");
    int objects = 0;
    std::uint64_t synth_seed = 0;
    auto* o_objects = synth->add_option("--objects", objects, "Number of catalog objects");
    auto* o_synth_seed = synth->add_option("--seed", synth_seed, "Catalog and noise seed");
    std::string catalog_file;
    double slip_band = 0, shake_rot = 0, shake_accel = 0, shake_duration = 0;
    auto* o_catalog = synth->add_option("--catalog", catalog_file, "Object catalog JSON (default: generated)")
                          ->check(CLI::ExistingFile);
    auto* o_slip_band = synth->add_option("--slip-band", slip_band, "Margins in (-band, 0] are Slip");
    auto* o_shake_rot = synth->add_option("--shake-rot", shake_rot, "Shake angular acceleration, rad/s^2");
    auto* o_shake_accel = synth->add_option("--shake-accel", shake_accel, "Shake linear acceleration, m/s^2");
    auto* o_shake_duration = synth->add_option("--shake-duration", shake_duration, "Shake duration, s");

    auto* ingest = app.add_subcommand("ingest", "Convert a public release tree into the data root");
    ingest->add_option("--source", source, "Release directory")->required()->check(CLI::ExistingDirectory);
    ingest->add_option("--mapping", mapping, "JSON field/stream name mapping")->check(CLI::ExistingFile);

    auto* stats = app.add_subcommand("stats", "Per-phase label counts and unstable percentages");
    stats->add_option("--format", format, "table, csv or json");
    stats->add_option("--out", out, "Write to a file instead of stdout");

    // Options shared by train and sweep.
    std::string protocol, variant, modalities;
    std::uint64_t split_seed = 0, seed = 0;
    std::size_t split_index = 0;
    int iterations = 0, anneal_at = 0, hidden = 0, batch = 0;
    double lr = 0, sigma = 0;
    bool tune = false, exclude_reference = false;
    struct Shared {
        CLI::Option *split_seed, *iterations, *anneal_at, *hidden, *batch, *lr, *sigma, *tune, *exclude_reference;
    };
    auto add_shared = [&](CLI::App* sub) {
        Shared s{};
        s.split_seed = sub->add_option("--split-seed", split_seed, "Seed of the first split");
        s.iterations = sub->add_option("--iterations", iterations, "SGD iterations");
        s.anneal_at = sub->add_option("--anneal-at", anneal_at, "Iteration of the learning-rate anneal");
        s.hidden = sub->add_option("--hidden", hidden, "LSTM hidden size");
        s.batch = sub->add_option("--batch", batch, "Batch (and DRS pre-batch) size");
        s.lr = sub->add_option("--lr", lr, "Initial learning rate");
        s.sigma = sub->add_option("--sigma", sigma, "DRS sampling ratio");
        s.tune = sub->add_flag("--tune-sigma", tune, "Choose sigma from {0.5, 1} on validation");
        s.exclude_reference = sub->add_flag("--exclude-reference", exclude_reference,
                                            "Drop reference-pose cycles from pose-group splits");
        return s;
    };
    auto apply_shared = [&](const Shared& s) {
        ov.add(s.split_seed, "/split/seed"_json_pointer, split_seed);
        ov.add(s.iterations, "/train/iterations"_json_pointer, iterations);
        ov.add(s.anneal_at, "/train/anneal_at"_json_pointer, anneal_at);
        ov.add(s.hidden, "/train/hidden"_json_pointer, hidden);
        ov.add(s.batch, "/train/batch_size"_json_pointer, batch);
        ov.add(s.lr, "/train/learning_rate"_json_pointer, lr);
        ov.add(s.sigma, "/drs/sigma"_json_pointer, sigma);
        ov.add(s.tune, "/drs/tune"_json_pointer, tune);
        ov.add(s.exclude_reference, "/split/exclude_reference"_json_pointer, exclude_reference);
    };

    // Options naming a single run, shared by train and eval.
    struct Selection {
        CLI::Option *protocol, *variant, *modalities, *split_index, *seed;
    };
    auto add_selection = [&](CLI::App* sub) {
        Selection s{};
        s.protocol = sub->add_option("--protocol", protocol, "uniform, random-poses, pose-group, unseen-objects");
        s.variant = sub->add_option("--variant", variant, "lstm, lstm-drs, lstm-p, lstm-wc, linear, majority");
        s.modalities = sub->add_option("--modalities", modalities, "v, t or vt");
        s.split_index = sub->add_option("--split-index", split_index, "Split number (pose-group: 0=G1 1=G2 2=G3)");
        s.seed = sub->add_option("--seed", seed, "Training seed");
        return s;
    };
    auto apply_selection = [&](const Selection& s) {
        ov.add(s.protocol, "/split/protocol"_json_pointer, protocol);
        ov.add(s.variant, "/model/variant"_json_pointer, variant);
        ov.add(s.modalities, "/model/modalities"_json_pointer, modalities);
        ov.add(s.split_index, "/split/index"_json_pointer, split_index);
        ov.add(s.seed, "/train/seed"_json_pointer, seed);
    };

    auto* train = app.add_subcommand("train", "Train one classifier on one split");
    const auto train_selection = add_selection(train);
    train->add_option("--out", out, "Run directory")->required();
    const auto train_shared = add_shared(train);

    auto* eval = app.add_subcommand(
        "eval", "Score a run directory, or train and score one configuration; prints one results row");
    auto* o_run = eval->add_option("--run", run, "Run directory written by train")->check(CLI::ExistingDirectory);
    const auto eval_selection = add_selection(eval);
    eval->add_option("--out", out, "Append the results row to this CSV file");
    const auto eval_shared = add_shared(eval);

    auto* sweep = app.add_subcommand("sweep", "Every protocol x variant x modality x split x seed");
    std::vector<std::string> protocols, variants, mods;
    std::vector<std::uint64_t> seeds;
    int repeats = 0;
    auto* o_protocols = sweep->add_option("--protocols", protocols, "Protocols to run");
    auto* o_variants = sweep->add_option("--variants", variants, "Variants to run");
    auto* o_mods = sweep->add_option("--modalities", mods, "Modality sets to run");
    auto* o_seeds = sweep->add_option("--seeds", seeds, "Training seeds per split");
    auto* o_repeats = sweep->add_option("--repeats", repeats, "Splits per protocol");
    std::string preset;
    auto* o_preset = sweep->add_option("--preset", preset,
                                       "paper-tables: every protocol with its published split and seed counts");
    sweep->add_option("--out", out, "Output directory")->required();
    const auto sweep_shared = add_shared(sweep);

    auto* report = app.add_subcommand("report", "Tables and charts from results files");
    report->add_option("--results", results_in, "results.csv files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", out, "Directory for tables.txt, summary.csv and SVG charts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            ov.add(o_objects, "/synth/objects"_json_pointer, objects);
            ov.add(o_synth_seed, "/synth/seed"_json_pointer, synth_seed);
            ov.add(o_catalog, "/synth/catalog"_json_pointer, catalog_file);
            ov.add(o_slip_band, "/synth/sim/slip_band"_json_pointer, slip_band);
            ov.add(o_shake_rot, "/synth/sim/shake/rot_impulse"_json_pointer, shake_rot);
            ov.add(o_shake_accel, "/synth/sim/shake/lin_accel_amplitude"_json_pointer, shake_accel);
            ov.add(o_shake_duration, "/synth/sim/shake/duration"_json_pointer, shake_duration);
            return cmd_synth(resolve(g, ov));
        }
        if (ingest->parsed()) return cmd_ingest(resolve(g, ov), source, mapping);
        if (stats->parsed()) return cmd_stats(resolve(g, ov), format, out);
        if (train->parsed()) {
            apply_selection(train_selection);
            apply_shared(train_shared);
            return cmd_train(resolve(g, ov), out);
        }
        if (eval->parsed()) {
            if (o_run->count() > 0) return cmd_eval_run(g, run, out);
            apply_selection(eval_selection);
            apply_shared(eval_shared);
            return cmd_eval_fresh(resolve(g, ov), out);
        }
        if (sweep->parsed()) {
            if (o_preset->count() > 0) {
                // Typed flags still win over the preset.
                json plan = json::array();
                for (auto e : preset_plan(preset)) {
                    if (o_protocols->count() > 0) {
                        const auto p = parse_protocol(e["protocol"].get<std::string>());
                        bool keep = false;
                        for (const auto& q : protocols) keep = keep || parse_protocol(q) == p;
                        if (!keep) continue;
                    }
                    if (o_variants->count() > 0) e["variants"] = variants;
                    if (o_seeds->count() > 0) e["seeds"] = seeds;
                    if (o_repeats->count() > 0) e["repeats"] = repeats;
                    plan.push_back(e);
                }
                ov.set("/sweep/plan"_json_pointer, plan);
                ov.set("/sweep/preset"_json_pointer, preset);
                ov.set("/sweep/modalities"_json_pointer, json{"T", "V", "V+T"});
                if (sweep_shared.sigma->count() == 0) ov.set("/drs/tune"_json_pointer, true);
            }
            ov.add(o_protocols, "/sweep/protocols"_json_pointer, protocols);
            ov.add(o_variants, "/sweep/variants"_json_pointer, variants);
            ov.add(o_mods, "/sweep/modalities"_json_pointer, mods);
            ov.add(o_seeds, "/sweep/seeds"_json_pointer, seeds);
            ov.add(o_repeats, "/sweep/repeats"_json_pointer, repeats);
            apply_shared(sweep_shared);
            return cmd_sweep(resolve(g, ov), out);
        }
        if (report->parsed()) return cmd_report(results_in, out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
