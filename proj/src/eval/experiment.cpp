#include "holdstab/eval/experiment.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"
#include "holdstab/model/network.hpp"

namespace holdstab {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;  // model initialisation

struct VariantName {
    Variant v;
    std::string_view id;
    std::string_view display;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Lstm, "lstm", "LSTM"},
    {Variant::LstmDrs, "lstm-drs", "LSTM+DRS"},
    {Variant::LstmP, "lstm-p", "LSTM-P (Baseline)"},
    {Variant::LstmWc, "lstm-wc", "LSTM-WC (Ceiling)"},
    {Variant::Linear, "linear", "Linear (Baseline)"},
    {Variant::Majority, "majority", "Majority Classifier (Baseline)"},
};

std::string normalize(std::string_view s) {
    std::string out;
    for (char c : s) out += c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const FeatureBank& bank_for(const ExperimentData& data, Variant v) {
    const FeatureBank* bank = v == Variant::LstmWc ? data.release : data.pose;
    if (!bank)
        throw ConfigError(v == Variant::LstmWc ? "lstm-wc needs features over the grasp-to-release span"
                                               : "no features over the grasp-to-pose-end span");
    return *bank;
}

std::vector<const FeatureSequence*> lookup(const FeatureBank& bank, const std::vector<std::string>& ids) {
    std::vector<const FeatureSequence*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(&bank.sequences[bank.find(id)]);
    return out;
}

/// Sliced to the kept modalities and standardized.
std::vector<FeatureSequence> prepare(std::span<const FeatureSequence* const> raw, const FeatureLayout& layout,
                                     Modalities keep, const Standardizer* standardizer) {
    std::vector<FeatureSequence> out;
    out.reserve(raw.size());
    for (const auto* s : raw) {
        auto seq = keep == layout.modalities ? *s : select_modalities(*s, layout, keep);
        if (standardizer) standardizer->apply_in_place(seq.matrix);
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<LabeledSequence> labeled(const std::vector<FeatureSequence>& seqs, bool pose_targets) {
    std::vector<LabeledSequence> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs)
        out.push_back({&s.matrix, class_of(pose_targets ? s.label_pose : s.label_shake), s.label_changes()});
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
    T v{};
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw DataError(std::string("bad ") + what + " in results file: '" + s + "'");
    return v;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
    for (const auto& n : kVariantNames)
        if (n.v == v) return n.id;
    return "?";
}

std::string_view display_name(Variant v) noexcept {
    for (const auto& n : kVariantNames)
        if (n.v == v) return n.display;
    return "?";
}

Variant parse_variant(std::string_view s) {
    const auto key = normalize(s);
    for (const auto& n : kVariantNames)
        if (key == n.id) return n.v;
    if (key == "lstm+drs" || key == "drs") return Variant::LstmDrs;
    throw ConfigError("unknown variant '" + std::string(s) + "'");
}

nlohmann::json ProtocolParams::to_json() const {
    return {{"train_fraction", train_fraction},
            {"n_test_poses", n_test_poses},
            {"n_test_objects", n_test_objects},
            {"exclude_reference", exclude_reference}};
}

ProtocolParams ProtocolParams::from_json(const nlohmann::json& j) {
    ProtocolParams p;
    p.train_fraction = j.value("train_fraction", p.train_fraction);
    p.n_test_poses = j.value("n_test_poses", p.n_test_poses);
    p.n_test_objects = j.value("n_test_objects", p.n_test_objects);
    p.exclude_reference = j.value("exclude_reference", p.exclude_reference);
    return p;
}

SplitManifest make_manifest(std::span<const CycleKey> keys, Protocol protocol, const ProtocolParams& params,
                            std::size_t index, std::uint64_t split_seed) {
    switch (protocol) {
        case Protocol::Uniform: return split_uniform(keys, params.train_fraction, split_seed);
        case Protocol::RandomPoses: return split_random_poses(keys, params.n_test_poses, split_seed);
        case Protocol::PoseGroup: {
            constexpr PoseGroup groups[] = {PoseGroup::G1, PoseGroup::G2, PoseGroup::G3};
            return split_pose_group(keys, groups[index % 3], split_seed, params.exclude_reference);
        }
        case Protocol::UnseenObjects: return split_unseen_objects(keys, params.n_test_objects, split_seed);
    }
    throw ConfigError("unknown protocol");
}

double default_sigma(Modalities m) noexcept { return m.tactile && !m.vision ? 0.5 : 1.0; }

std::vector<CycleKey> ExperimentData::keys() const {
    if (!pose) throw ConfigError("no features over the grasp-to-pose-end span");
    std::vector<CycleKey> out;
    out.reserve(pose->size());
    for (const auto& s : pose->sequences) out.push_back({s.cycle_id, s.object_id, s.pose_id});
    return out;
}

std::vector<BinaryLabel> FittedModel::predict(std::span<const FeatureSequence* const> raw) const {
    if (variant == Variant::Majority) return std::vector<BinaryLabel>(raw.size(), majority);
    if (!model) throw ConfigError("fitted model has no weights");
    const auto seqs = prepare(raw, layout, modalities, &standardizer);
    std::vector<const Eigen::MatrixXd*> xs;
    xs.reserve(seqs.size());
    for (const auto& s : seqs) xs.push_back(&s.matrix);
    return holdstab::predict(*model, std::span<const Eigen::MatrixXd* const>(xs));
}

nlohmann::json FittedModel::describe() const {
    nlohmann::json j = {{"variant", to_string(variant)}, {"modalities", to_string(modalities)}};
    if (variant == Variant::Majority) {
        j["majority"] = to_string(majority);
        return j;
    }
    j["standardizer"] = standardizer.to_json();
    if (model) j["model"] = model->config.to_json();
    if (variant == Variant::LstmDrs) j["sigma"] = sigma;
    if (training) {
        j["best_iteration"] = training->best_iteration;
        j["best_val_accuracy"] = training->best_val_accuracy;
    }
    return j;
}

FittedModel fit_variant(const ExperimentData& data, Variant variant, Modalities modalities, const SplitManifest& manifest,
                        const VariantOptions& opts, Exec exec, std::ostream* train_log) {
    if (!modalities.any()) throw ConfigError("at least one of vision or tactile must be selected");
    const auto& bank = bank_for(data, variant);
    if (!(modalities.vision <= bank.layout.modalities.vision && modalities.tactile <= bank.layout.modalities.tactile))
        throw ConfigError("features were extracted without " + to_string(modalities));
    if (manifest.train.empty()) throw DataError("manifest has an empty train slice");

    FittedModel fm;
    fm.variant = variant;
    fm.modalities = modalities;
    fm.layout = bank.layout;

    const auto train_raw = lookup(bank, manifest.train);
    if (variant == Variant::Majority) {
        std::vector<BinaryLabel> labels;
        labels.reserve(train_raw.size());
        for (const auto* s : train_raw) labels.push_back(s->label_shake);
        fm.majority = majority_label(labels);
        return fm;
    }

    auto train_seqs = prepare(train_raw, bank.layout, modalities, nullptr);
    fm.standardizer = fit_standardizer(train_seqs, exec);
    for (auto& s : train_seqs) fm.standardizer.apply_in_place(s.matrix);
    const auto val_seqs = prepare(lookup(bank, manifest.val), bank.layout, modalities, &fm.standardizer);

    const bool pose_targets = variant == Variant::LstmP;
    const auto train_set = labeled(train_seqs, pose_targets);
    const auto val_set = labeled(val_seqs, pose_targets);

    const auto& cfg = opts.train;
    cfg.validate();
    const int dim = train_seqs.front().dimension();
    const auto model_cfg =
        variant == Variant::Linear ? linear_config(train_seqs.front().timesteps(), dim) : lstm_config(cfg, dim);
    const auto init = Model<float>::init(model_cfg, derive_seed(cfg.seed, kInitStream));

    if (variant != Variant::LstmDrs) {
        fm.training = train(init, train_set, cfg, std::nullopt, val_set, train_log, exec);
        fm.model = fm.training->best;
        return fm;
    }

    std::vector<char> changes;
    changes.reserve(train_set.size());
    for (const auto& s : train_set) changes.push_back(s.label_changes);
    const double r = partition(std::span<const char>(changes)).r;

    std::vector<double> sigmas;
    if (opts.tune_sigma) {
        for (double s : kSigmaChoices)
            if (s > r) sigmas.push_back(s);
        if (sigmas.empty())
            throw ConfigError("no sigma choice exceeds the training ratio r = " + format_double(r));
    } else {
        sigmas.push_back(opts.sigma.value_or(default_sigma(modalities)));
    }

    for (double sigma : sigmas) {
        DrsConfig drs;
        drs.sigma = sigma;
        drs.pre_batch_size = cfg.batch_size;
        auto result = train(init, train_set, cfg, drs, val_set, train_log, exec);
        // Strictly better only, so the earlier (smaller) sigma wins ties.
        if (!fm.training || result.best_val_accuracy > fm.training->best_val_accuracy) {
            fm.training = std::move(result);
            fm.sigma = sigma;
        }
    }
    fm.model = fm.training->best;
    return fm;
}

nlohmann::json RunResult::to_json() const {
    return {{"protocol", to_string(protocol)},
            {"variant", to_string(variant)},
            {"modalities", to_string(modalities)},
            {"seed", seed},
            {"split_seed", split_seed},
            {"split", split_tag},
            {"metrics", metrics.to_json()},
            {"best_iteration", best_iteration},
            {"best_val_accuracy", best_val_accuracy},
            {"sigma", sigma}};
}

RunResult run_single(const ExperimentData& data, Variant variant, Modalities modalities, const SplitManifest& manifest,
                     const VariantOptions& opts, Exec exec, std::ostream* train_log) {
    const auto fm = fit_variant(data, variant, modalities, manifest, opts, exec, train_log);
    // Only the test slice reaches the classifier.
    const auto test = lookup(bank_for(data, variant), manifest.test);
    const Classifier classify = [&fm](std::span<const FeatureSequence* const> xs) { return fm.predict(xs); };

    RunResult r;
    r.protocol = manifest.protocol;
    r.variant = variant;
    r.modalities = modalities;
    r.seed = opts.train.seed;
    r.split_seed = manifest.seed;
    if (manifest.params.contains("held_group")) r.split_tag = manifest.params["held_group"].get<std::string>();
    r.metrics = evaluate(classify, test);
    if (fm.training) {
        r.best_iteration = fm.training->best_iteration;
        r.best_val_accuracy = fm.training->best_val_accuracy;
    }
    r.sigma = fm.sigma;
    return r;
}

nlohmann::json ExperimentSpec::to_json() const {
    nlohmann::json drs;
    if (options.tune_sigma)
        drs = "tuned";
    else
        drs = options.sigma.value_or(default_sigma(modalities));
    return {{"protocol", to_string(protocol)},
            {"variant", to_string(variant)},
            {"modalities", to_string(modalities)},
            {"repeats", repeats},
            {"split_seed_base", split_seed_base},
            {"seeds", seeds},
            {"train", options.train.to_json()},
            {"sigma", drs},
            {"params", params.to_json()}};
}

std::vector<RunResult> run_experiment(const ExperimentData& data, const ExperimentSpec& spec, Exec exec,
                                      const RunHooks* hooks) {
    if (spec.repeats <= 0) throw ConfigError("repeats must be positive");
    if (spec.seeds.empty()) throw ConfigError("at least one seed is required");
    const auto keys = data.keys();

    std::vector<SplitManifest> manifests;
    for (int i = 0; i < spec.repeats; ++i) {
        manifests.push_back(make_manifest(keys, spec.protocol, spec.params, static_cast<std::size_t>(i),
                                          spec.split_seed_base + static_cast<std::uint64_t>(i)));
        if (hooks && hooks->on_manifest) hooks->on_manifest(manifests.back(), static_cast<std::size_t>(i));
    }

    const std::size_t n_seeds = spec.seeds.size();
    const std::size_t n_runs = manifests.size() * n_seeds;
    std::vector<RunResult> results(n_runs);
    const Exec inner = exec == Exec::Parallel && n_runs > 1 ? Exec::Serial : exec;
    std::mutex hook_mutex;
    for_each_index(exec, n_runs, [&](std::size_t k) {
        const std::size_t split = k / n_seeds;
        auto opts = spec.options;
        opts.train.seed = spec.seeds[k % n_seeds];
        results[k] = run_single(data, spec.variant, spec.modalities, manifests[split], opts, inner);
        if (results[k].split_tag.empty()) results[k].split_tag = std::to_string(split);
        if (hooks && hooks->on_result) {
            std::lock_guard lock(hook_mutex);
            hooks->on_result(results[k]);
        }
    });
    return results;
}

void write_results_header(std::ostream& out) {
    out << "protocol,variant,modalities,seed,split_seed,accuracy,accuracy_on_Sneq,n_test\n";
}

void write_result_row(std::ostream& out, const RunResult& r) {
    out << to_string(r.protocol) << ',' << to_string(r.variant) << ',' << to_string(r.modalities) << ',' << r.seed
        << ',' << r.split_seed << ',' << format_double(r.metrics.accuracy) << ','
        << format_double(r.metrics.accuracy_on_sneq) << ',' << r.metrics.n << '\n';
}

void write_results_csv(std::ostream& out, std::span<const RunResult> results) {
    write_results_header(out);
    for (const auto& r : results) write_result_row(out, r);
}

std::vector<RunResult> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty results file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv_line(line) != std::vector<std::string>{"protocol", "variant", "modalities", "seed", "split_seed",
                                                         "accuracy", "accuracy_on_Sneq", "n_test"})
        throw DataError("unexpected results header: " + line);
    std::vector<RunResult> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw DataError("results row has " + std::to_string(f.size()) + " fields: " + line);
        RunResult r;
        r.protocol = parse_protocol(f[0]);
        r.variant = parse_variant(f[1]);
        r.modalities = parse_modalities(f[2]);
        r.seed = parse_number<std::uint64_t>(f[3], "seed");
        r.split_seed = parse_number<std::uint64_t>(f[4], "split_seed");
        r.metrics.accuracy = parse_number<double>(f[5], "accuracy");
        r.metrics.accuracy_on_sneq =
            f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_number<double>(f[6], "accuracy_on_Sneq");
        r.metrics.n = parse_number<std::size_t>(f[7], "n_test");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace holdstab
