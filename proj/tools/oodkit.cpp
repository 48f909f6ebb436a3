// oodkit: command-line surface for synthetic data generation, toy-model
// training, detector fitting, anomaly scoring, and metric evaluation.
//
// Exit codes: 0 success, 2 usage or input error, 3 training divergence,
// 4 undefined metric.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oodkit/density.hpp"
#include "oodkit/detectors.hpp"
#include "oodkit/io.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/model_io.hpp"
#include "oodkit/pipeline.hpp"
#include "oodkit/rng.hpp"
#include "oodkit/synthetic.hpp"
#include "oodkit/toymodel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace oodkit;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kOodtFormatVersion = 1;
constexpr int kOodmFormatVersion = 1;

constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitUndefinedMetric = 4;

/// Serialized next to every output so a run can be reproduced from its
/// manifest alone.
struct Manifest {
    std::string subcommand;
    std::map<std::string, std::string> params;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const fs::path& path) const {
        const double duration =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j;
        j["subcommand"] = subcommand;
        j["params"] = params;
        j["seed"] = seed;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["tool_version"] = kToolVersion;
        j["duration_seconds"] = duration;
        std::ofstream out(path, std::ios::trunc);
        out << j.dump(2) << "\n";
    }
};

std::vector<std::uint32_t> parse_shape(const std::string& text) {
    std::vector<std::uint32_t> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            const long v = std::stol(part);
            if (v < 1) throw std::out_of_range("dim");
            dims.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw InvalidInput("bad shape \"" + text + "\" (expected e.g. 32x32)");
        }
    }
    if (dims.empty())
        throw InvalidInput("empty shape");
    return dims;
}

void require_file(const fs::path& path, const std::string& flag) {
    if (path.empty())
        throw InvalidInput("missing required " + flag);
    if (!fs::exists(path))
        throw InvalidInput("input file does not exist: " + path.string() + " (" + flag + ")");
}

std::vector<std::uint32_t> load_class_labels(const fs::path& path) {
    const Tensor t = read_tensor(path);
    std::vector<std::uint32_t> labels(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const float v = t[i];
        if (v < 0.0f || v != static_cast<float>(static_cast<std::uint32_t>(v)))
            throw InvalidInput("class labels must be non-negative integers");
        labels[i] = static_cast<std::uint32_t>(v);
    }
    return labels;
}

json report_to_json(const EvalReport& report) {
    return json{{"auroc", report.auroc},
                {"aupr", report.aupr},
                {"fpr_at_recall", report.fpr_at_recall},
                {"recall_level", report.recall_level},
                {"positives", report.positives},
                {"negatives", report.negatives},
                {"skipped_images", report.skipped_images}};
}

// ---------------------------------------------------------------- gen ----

struct GenArgs {
    std::string generator;
    std::size_t count = 100;
    std::string shape = "32x32";
    std::uint64_t seed = 0;
    fs::path out_dir = "out";
    double sigma = 0.5;
    double blur_sigma = 2.0;
    // mixture options
    std::uint32_t classes = 20;
    std::uint32_t dim = 16;
    double class_sigma = 1.0;
    std::uint32_t fine_pairs = 5;
    double fine_sep = 1.0;
    double base_sep = 4.0;
    std::size_t per_class = 200;
};

int cmd_gen(const GenArgs& args) {
    static const std::vector<std::string> kGenerators = {"gaussian", "rademacher", "blobs",
                                                         "mixture", "ood-mixture"};
    if (std::find(kGenerators.begin(), kGenerators.end(), args.generator) ==
        kGenerators.end()) {
        std::cerr << "unknown generator \"" << args.generator << "\"; available:";
        for (const auto& g : kGenerators) std::cerr << ' ' << g;
        std::cerr << "\n";
        return kExitUsage;
    }
    fs::create_directories(args.out_dir);
    Manifest manifest;
    manifest.subcommand = "gen";
    manifest.seed = args.seed;
    manifest.params = {{"generator", args.generator},
                       {"count", std::to_string(args.count)},
                       {"shape", args.shape}};

    const fs::path data_path = args.out_dir / "data.oodt";
    if (args.generator == "gaussian") {
        manifest.params["sigma"] = std::to_string(args.sigma);
        write_tensor(gen_gaussian_ood(args.count, parse_shape(args.shape), args.seed,
                                      args.sigma),
                     data_path);
    } else if (args.generator == "rademacher") {
        write_tensor(gen_rademacher_ood(args.count, parse_shape(args.shape), args.seed),
                     data_path);
    } else if (args.generator == "blobs") {
        manifest.params["blur_sigma"] = std::to_string(args.blur_sigma);
        write_tensor(gen_blobs_ood(args.count, parse_shape(args.shape), args.seed,
                                   args.blur_sigma),
                     data_path);
    } else {
        const MixtureSpec spec =
            make_mixture_spec(args.classes, args.dim, args.class_sigma, args.fine_pairs,
                              args.fine_sep, args.base_sep, args.seed);
        manifest.params["classes"] = std::to_string(args.classes);
        manifest.params["dim"] = std::to_string(args.dim);
        manifest.params["class_sigma"] = std::to_string(args.class_sigma);
        manifest.params["fine_pairs"] = std::to_string(args.fine_pairs);
        manifest.params["fine_sep"] = std::to_string(args.fine_sep);
        manifest.params["base_sep"] = std::to_string(args.base_sep);
        if (args.generator == "mixture") {
            manifest.params["per_class"] = std::to_string(args.per_class);
            const LabeledDataset data = gen_mixture_dataset(spec, args.per_class, args.seed);
            write_tensor(data.features, data_path);
            std::vector<float> labels(data.labels.begin(), data.labels.end());
            const auto label_count = static_cast<std::uint32_t>(labels.size());
            const fs::path labels_path = args.out_dir / "class_labels.oodt";
            write_tensor(Tensor({label_count}, std::move(labels)), labels_path);
            manifest.outputs.push_back(labels_path.string());
        } else {
            write_tensor(gen_ood_mixture(spec, args.count, args.seed), data_path);
        }
    }
    manifest.outputs.insert(manifest.outputs.begin(), data_path.string());
    manifest.write(args.out_dir / "manifest.json");
    std::cout << "wrote " << data_path.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- train ----

struct TrainArgs {
    fs::path features, class_labels, out = "model.oodm", trace;
    std::string hidden = "64";
    std::string head = "softmax";
    double dropout = 0.0;
    bool confidence = false;
    bool autoencoder = false;
    std::string bottleneck = "8";
    std::uint32_t epochs = 50;
    double lr = 0.05;
    std::uint32_t batch = 32;
    std::uint64_t seed = 1;
    double lambda_init = 0.1;
    double budget = 0.3;
    double hint_probability = 0.5;
};

std::vector<std::uint32_t> parse_width_list(const std::string& text) {
    std::vector<std::uint32_t> widths;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            widths.push_back(static_cast<std::uint32_t>(std::stoul(part)));
        } catch (const std::exception&) {
            throw InvalidInput("bad width list \"" + text + "\"");
        }
    }
    return widths;
}

void write_trace(const TrainTrace& trace, const fs::path& path) {
    if (path.empty()) return;
    json j;
    j["epochs"] = trace.epoch_loss.size() - 1;
    j["loss"] = trace.epoch_loss;
    j["lambda"] = trace.lambda;
    j["mean_confidence"] = trace.mean_confidence;
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << "\n";
}

int cmd_train(const TrainArgs& args) {
    require_file(args.features, "--features");
    const Tensor features = read_tensor(args.features);
    Manifest manifest;
    manifest.subcommand = "train";
    manifest.seed = args.seed;
    manifest.inputs.push_back(args.features.string());
    manifest.params = {{"epochs", std::to_string(args.epochs)},
                       {"lr", std::to_string(args.lr)},
                       {"batch", std::to_string(args.batch)}};

    TrainConfig config;
    config.epochs = args.epochs;
    config.learning_rate = args.lr;
    config.batch_size = args.batch;
    config.seed = args.seed;
    config.lambda_init = args.lambda_init;
    config.budget = args.budget;
    config.hint_probability = args.hint_probability;

    TrainTrace trace;
    if (args.autoencoder) {
        std::vector<std::uint32_t> widths;
        widths.push_back(static_cast<std::uint32_t>(features.dim(1)));
        for (auto w : parse_width_list(args.bottleneck)) widths.push_back(w);
        widths.push_back(static_cast<std::uint32_t>(features.dim(1)));
        ToyAutoencoder model = make_autoencoder(widths, args.seed);
        trace = train_autoencoder(model, features, config);
        save_autoencoder(model, args.out);
    } else {
        require_file(args.class_labels, "--class-labels");
        manifest.inputs.push_back(args.class_labels.string());
        const auto labels = load_class_labels(args.class_labels);
        const std::uint32_t num_classes =
            labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        std::vector<std::uint32_t> widths;
        widths.push_back(static_cast<std::uint32_t>(features.dim(1)));
        for (auto w : parse_width_list(args.hidden)) widths.push_back(w);
        widths.push_back(num_classes);
        const Head head = args.head == "sigmoid" ? Head::Sigmoid : Head::Softmax;
        if (args.head != "sigmoid" && args.head != "softmax")
            throw InvalidInput("unknown head \"" + args.head + "\"");
        ToyClassifier model =
            make_classifier(widths, head, args.dropout, args.confidence, args.seed);
        trace = args.confidence
                    ? train_confidence_branch(model, features, labels, config)
                    : train_classifier(model, features, labels, config);
        save_classifier(model, args.out);
    }
    write_trace(trace, args.trace);
    manifest.outputs.push_back(args.out.string());
    if (!args.trace.empty()) manifest.outputs.push_back(args.trace.string());
    manifest.write(fs::path(args.out.string() + ".manifest.json"));
    std::cout << "final loss " << trace.epoch_loss.back() << ", wrote " << args.out.string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
    std::string detector;
    fs::path val_logits, train, out = "model.oodm";
    std::size_t k = 20;
    std::uint32_t trees = 100;
    std::uint32_t subsample = 256;
    std::uint64_t seed = 0;
};

int cmd_fit(const FitArgs& args) {
    Manifest manifest;
    manifest.subcommand = "fit";
    manifest.seed = args.seed;
    manifest.params["detector"] = args.detector;
    if (args.detector == "klmatch") {
        require_file(args.val_logits, "--val-logits");
        manifest.inputs.push_back(args.val_logits.string());
        save_kl_templates(fit_kl_templates(read_tensor(args.val_logits)), args.out);
    } else if (args.detector == "lof") {
        require_file(args.train, "--train");
        manifest.inputs.push_back(args.train.string());
        manifest.params["k"] = std::to_string(args.k);
        save_lof(lof_fit(read_tensor(args.train), args.k), args.out);
    } else if (args.detector == "iforest") {
        require_file(args.train, "--train");
        manifest.inputs.push_back(args.train.string());
        manifest.params["trees"] = std::to_string(args.trees);
        manifest.params["subsample"] = std::to_string(args.subsample);
        save_iforest(iforest_fit(read_tensor(args.train), args.trees, args.subsample,
                                 args.seed),
                     args.out);
    } else {
        std::cerr << "unknown fit target \"" << args.detector
                  << "\"; available: klmatch lof iforest\n";
        return kExitUsage;
    }
    manifest.outputs.push_back(args.out.string());
    manifest.write(fs::path(args.out.string() + ".manifest.json"));
    std::cout << "wrote " << args.out.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- score ----

struct ScoreArgs {
    std::string detector;
    fs::path logits, posteriors, features, model, templates, input, recon, stack;
    fs::path out = "scores.oodt";
    std::size_t bg_index = 0;
    std::size_t passes = 8;
    std::uint64_t seed = 0;
    double temperature = 1000.0;
    double epsilon = 0.0;
    bool use_maxlogit = false;
};

std::vector<float> to_floats(const std::vector<double>& v) {
    return {v.begin(), v.end()};
}

int cmd_score(const ScoreArgs& args) {
    Manifest manifest;
    manifest.subcommand = "score";
    manifest.seed = args.seed;
    manifest.params["detector"] = args.detector;
    Tensor scores;
    const std::string& d = args.detector;
    if (d == "msp" || d == "maxlogit" || d == "logitavg") {
        require_file(args.logits, "--logits");
        manifest.inputs.push_back(args.logits.string());
        const Tensor logits = read_tensor(args.logits);
        scores = d == "msp"        ? msp_score(logits)
                 : d == "maxlogit" ? maxlogit_score(logits)
                                   : logit_avg_score(logits);
    } else if (d == "klmatch") {
        require_file(args.logits, "--logits");
        require_file(args.templates, "--templates");
        manifest.inputs = {args.logits.string(), args.templates.string()};
        scores = kl_matching_score(read_tensor(args.logits),
                                   load_kl_templates(args.templates));
    } else if (d == "background") {
        require_file(args.posteriors, "--posteriors");
        manifest.inputs.push_back(args.posteriors.string());
        manifest.params["bg_index"] = std::to_string(args.bg_index);
        scores = background_score(read_tensor(args.posteriors), args.bg_index);
    } else if (d == "dropoutvar") {
        if (!args.stack.empty()) {
            require_file(args.stack, "--stack");
            manifest.inputs.push_back(args.stack.string());
            scores = dropout_variance_score(read_tensor(args.stack));
        } else {
            require_file(args.model, "--model");
            require_file(args.features, "--features");
            manifest.inputs = {args.model.string(), args.features.string()};
            manifest.params["passes"] = std::to_string(args.passes);
            const ToyClassifier model = load_classifier(args.model);
            scores = dropout_variance_score(mc_dropout_posteriors(
                model, read_tensor(args.features), args.passes, args.seed));
        }
    } else if (d == "recon") {
        if (!args.model.empty()) {
            require_file(args.model, "--model");
            require_file(args.features, "--features");
            manifest.inputs = {args.model.string(), args.features.string()};
            const ToyAutoencoder model = load_autoencoder(args.model);
            const Tensor features = read_tensor(args.features);
            scores = reconstruction_score(features, reconstruct(model, features));
        } else {
            require_file(args.input, "--input");
            require_file(args.recon, "--recon");
            manifest.inputs = {args.input.string(), args.recon.string()};
            scores = reconstruction_score(read_tensor(args.input), read_tensor(args.recon));
        }
    } else if (d == "lof" || d == "iforest") {
        require_file(args.model, "--model");
        require_file(args.features, "--features");
        manifest.inputs = {args.model.string(), args.features.string()};
        const Tensor queries = read_tensor(args.features);
        const std::vector<double> s = d == "lof"
                                          ? lof_score(load_lof(args.model), queries)
                                          : iforest_score(load_iforest(args.model), queries);
        scores = Tensor({static_cast<std::uint32_t>(s.size())}, to_floats(s));
    } else if (d == "branch") {
        require_file(args.model, "--model");
        require_file(args.features, "--features");
        manifest.inputs = {args.model.string(), args.features.string()};
        const std::vector<double> s =
            confidence_score(load_classifier(args.model), read_tensor(args.features));
        scores = Tensor({static_cast<std::uint32_t>(s.size())}, to_floats(s));
    } else if (d == "odin") {
        require_file(args.model, "--model");
        require_file(args.features, "--features");
        manifest.inputs = {args.model.string(), args.features.string()};
        manifest.params["temperature"] = std::to_string(args.temperature);
        manifest.params["epsilon"] = std::to_string(args.epsilon);
        scores = odin_score(load_classifier(args.model), read_tensor(args.features),
                            args.temperature, args.epsilon, args.use_maxlogit);
    } else {
        std::cerr << "unknown detector \"" << d
                  << "\"; available: msp maxlogit logitavg klmatch background dropoutvar "
                     "recon lof iforest branch odin\n";
        return kExitUsage;
    }
    write_tensor(scores, args.out);
    manifest.outputs.push_back(args.out.string());
    manifest.write(fs::path(args.out.string() + ".manifest.json"));
    std::cout << "wrote " << args.out.string() << "\n";
    return 0;
}

// --------------------------------------------------------------- eval ----

struct EvalArgs {
    std::vector<fs::path> scores;
    std::vector<fs::path> labels;
    bool segmentation = false;
    double recall_level = 0.95;
    fs::path curves_dir;
    fs::path out = "report.json";
};

int cmd_eval(const EvalArgs& args) {
    if (args.scores.empty() || args.scores.size() != args.labels.size())
        throw InvalidInput("need matching --scores and --labels files");
    Manifest manifest;
    manifest.subcommand = "eval";
    manifest.params["recall_level"] = std::to_string(args.recall_level);
    manifest.params["segmentation"] = args.segmentation ? "true" : "false";

    EvalReport report;
    std::vector<float> all_scores;
    std::vector<std::uint8_t> all_labels;
    if (args.segmentation) {
        std::vector<Tensor> maps;
        std::vector<LabelVector> masks;
        for (std::size_t i = 0; i < args.scores.size(); ++i) {
            require_file(args.scores[i], "--scores");
            require_file(args.labels[i], "--labels");
            manifest.inputs.push_back(args.scores[i].string());
            manifest.inputs.push_back(args.labels[i].string());
            maps.push_back(read_tensor(args.scores[i]));
            masks.push_back(read_labels(args.labels[i]));
        }
        report = evaluate_segmentation(maps, masks, args.recall_level);
    } else {
        for (std::size_t i = 0; i < args.scores.size(); ++i) {
            require_file(args.scores[i], "--scores");
            require_file(args.labels[i], "--labels");
            manifest.inputs.push_back(args.scores[i].string());
            manifest.inputs.push_back(args.labels[i].string());
            const Tensor s = read_tensor(args.scores[i]);
            const LabelVector l = read_labels(args.labels[i]);
            all_scores.insert(all_scores.end(), s.data().begin(), s.data().end());
            all_labels.insert(all_labels.end(), l.values().begin(), l.values().end());
        }
        report = evaluate(all_scores, all_labels, args.recall_level);
    }

    if (!args.curves_dir.empty() && !args.segmentation) {
        fs::create_directories(args.curves_dir);
        write_curve_csv(roc_curve(all_scores, all_labels), args.curves_dir / "roc.csv");
        write_curve_csv(pr_curve(all_scores, all_labels), args.curves_dir / "pr.csv");
        manifest.outputs.push_back((args.curves_dir / "roc.csv").string());
        manifest.outputs.push_back((args.curves_dir / "pr.csv").string());
    }

    {
        std::ofstream out(args.out, std::ios::trunc);
        out << report_to_json(report).dump(2) << "\n";
    }
    manifest.outputs.push_back(args.out.string());
    manifest.write(fs::path(args.out.string() + ".manifest.json"));
    std::cout << report_to_json(report).dump() << "\n";
    return 0;
}

// --------------------------------------------------------------- demo ----

struct DemoArgs {
    std::uint64_t seed = 7;
    std::size_t seeds = 5;
    fs::path out_dir = "demo_out";
};

int cmd_demo(const DemoArgs& args) {
    fs::create_directories(args.out_dir);
    Manifest manifest;
    manifest.subcommand = "demo";
    manifest.seed = args.seed;
    manifest.params["seeds"] = std::to_string(args.seeds);

    BenchmarkConfig config;
    std::map<std::string, std::vector<EvalReport>> by_detector;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < args.seeds; ++i) {
        const std::uint64_t run_seed = args.seed + i;
        const BenchmarkRun run = run_mixture_benchmark(config, run_seed);
        json j;
        j["seed"] = run_seed;
        j["train_accuracy"] = run.train_accuracy;
        for (const auto& r : run.results) {
            j["detectors"][r.detector] = report_to_json(r.report);
            if (by_detector.find(r.detector) == by_detector.end()) order.push_back(r.detector);
            by_detector[r.detector].push_back(r.report);
        }
        const fs::path report_path =
            args.out_dir / ("seed_" + std::to_string(run_seed) + ".json");
        std::ofstream out(report_path, std::ios::trunc);
        out << j.dump(2) << "\n";
        manifest.outputs.push_back(report_path.string());
    }

    std::ostringstream md, csv;
    md << "| detector | AUROC | AUPR | FPR95 |\n|---|---|---|---|\n";
    csv << "detector,auroc,aupr,fpr95\n";
    md.precision(4);
    csv.precision(6);
    for (const auto& name : order) {
        const auto& reports = by_detector[name];
        double auroc = 0, aupr = 0, fpr = 0;
        for (const auto& r : reports) {
            auroc += r.auroc;
            aupr += r.aupr;
            fpr += r.fpr_at_recall;
        }
        const auto n = static_cast<double>(reports.size());
        md << "| " << name << " | " << auroc / n << " | " << aupr / n << " | " << fpr / n
           << " |\n";
        csv << name << ',' << auroc / n << ',' << aupr / n << ',' << fpr / n << '\n';
    }
    {
        std::ofstream out(args.out_dir / "table.md", std::ios::trunc);
        out << md.str();
    }
    {
        std::ofstream out(args.out_dir / "table.csv", std::ios::trunc);
        out << csv.str();
    }
    manifest.outputs.push_back((args.out_dir / "table.md").string());
    manifest.outputs.push_back((args.out_dir / "table.csv").string());
    manifest.write(args.out_dir / "manifest.json");
    std::cout << md.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"out-of-distribution detection toolkit"};
    app.require_subcommand(0, 1);

    bool show_version = false;
    app.add_flag("--version", show_version, "print tool and format versions");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate synthetic tensors");
    gen_cmd->add_option("generator", gen.generator,
                        "gaussian|rademacher|blobs|mixture|ood-mixture")
        ->required();
    gen_cmd->add_option("--count", gen.count);
    gen_cmd->add_option("--shape", gen.shape, "e.g. 32x32 or 32x32x3");
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--out", gen.out_dir);
    gen_cmd->add_option("--sigma", gen.sigma, "gaussian standard deviation");
    gen_cmd->add_option("--blur-sigma", gen.blur_sigma);
    gen_cmd->add_option("--classes", gen.classes);
    gen_cmd->add_option("--dim", gen.dim);
    gen_cmd->add_option("--class-sigma", gen.class_sigma);
    gen_cmd->add_option("--fine-pairs", gen.fine_pairs);
    gen_cmd->add_option("--fine-sep", gen.fine_sep);
    gen_cmd->add_option("--base-sep", gen.base_sep);
    gen_cmd->add_option("--per-class", gen.per_class);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train the toy classifier or autoencoder");
    train_cmd->add_option("--features", train.features)->required();
    train_cmd->add_option("--class-labels", train.class_labels);
    train_cmd->add_option("--hidden", train.hidden, "comma-separated hidden widths");
    train_cmd->add_option("--head", train.head, "softmax|sigmoid");
    train_cmd->add_option("--dropout", train.dropout);
    train_cmd->add_flag("--confidence", train.confidence, "train the confidence branch");
    train_cmd->add_flag("--autoencoder", train.autoencoder);
    train_cmd->add_option("--bottleneck", train.bottleneck,
                          "autoencoder hidden widths, e.g. 12,4,12");
    train_cmd->add_option("--epochs", train.epochs);
    train_cmd->add_option("--lr", train.lr);
    train_cmd->add_option("--batch", train.batch);
    train_cmd->add_option("--seed", train.seed);
    train_cmd->add_option("--lambda-init", train.lambda_init);
    train_cmd->add_option("--budget", train.budget);
    train_cmd->add_option("--hint-probability", train.hint_probability);
    train_cmd->add_option("--out", train.out);
    train_cmd->add_option("--trace", train.trace);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit klmatch templates or a density model");
    fit_cmd->add_option("detector", fit.detector, "klmatch|lof|iforest")->required();
    fit_cmd->add_option("--val-logits", fit.val_logits);
    fit_cmd->add_option("--train", fit.train);
    fit_cmd->add_option("--k", fit.k);
    fit_cmd->add_option("--trees", fit.trees);
    fit_cmd->add_option("--subsample", fit.subsample);
    fit_cmd->add_option("--seed", fit.seed);
    fit_cmd->add_option("--out", fit.out);

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "compute anomaly scores");
    score_cmd->add_option("detector", score.detector)->required();
    score_cmd->add_option("--logits", score.logits);
    score_cmd->add_option("--posteriors", score.posteriors);
    score_cmd->add_option("--features", score.features);
    score_cmd->add_option("--model", score.model);
    score_cmd->add_option("--templates", score.templates);
    score_cmd->add_option("--input", score.input);
    score_cmd->add_option("--recon", score.recon);
    score_cmd->add_option("--stack", score.stack);
    score_cmd->add_option("--bg-index", score.bg_index);
    score_cmd->add_option("--passes", score.passes);
    score_cmd->add_option("--seed", score.seed);
    score_cmd->add_option("--temperature", score.temperature);
    score_cmd->add_option("--epsilon", score.epsilon);
    score_cmd->add_flag("--maxlogit", score.use_maxlogit, "odin: score with maxlogit");
    score_cmd->add_option("--out", score.out);

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate scores against labels");
    eval_cmd->add_option("--scores", eval.scores)->required();
    eval_cmd->add_option("--labels", eval.labels)->required();
    eval_cmd->add_flag("--segmentation", eval.segmentation,
                       "per-image averaging over score maps");
    eval_cmd->add_option("--recall-level", eval.recall_level);
    eval_cmd->add_option("--curves", eval.curves_dir, "directory for roc.csv and pr.csv");
    eval_cmd->add_option("--out", eval.out);

    DemoArgs demo;
    auto* demo_cmd = app.add_subcommand("demo", "end-to-end fine-grained mixture benchmark");
    demo_cmd->add_option("--seed", demo.seed);
    demo_cmd->add_option("--seeds", demo.seeds);
    demo_cmd->add_option("--out", demo.out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (show_version) {
        std::cout << "oodkit " << kToolVersion << " (OODT v" << kOodtFormatVersion << ", OODM v"
                  << kOodmFormatVersion << ")\n";
        return 0;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen(gen);
        if (train_cmd->parsed()) return cmd_train(train);
        if (fit_cmd->parsed()) return cmd_fit(fit);
        if (score_cmd->parsed()) return cmd_score(score);
        if (eval_cmd->parsed()) return cmd_eval(eval);
        if (demo_cmd->parsed()) return cmd_demo(demo);
        std::cout << app.help();
        return 0;
    } catch (const UndefinedMetric& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUndefinedMetric;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
