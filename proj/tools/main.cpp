// sensy: prompt-sensitivity screening toolkit.
//
// Subcommands cover the full pipeline: dataset ingestion and categorization,
// featurization, Random Forest training, stratified-CV and cross-dataset
// evaluation, LLM interrogation, adequacy aggregation, one-shot
// classification, and the HTTP gateway.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensy/adequacy.hpp"
#include "sensy/corpus.hpp"
#include "sensy/error.hpp"
#include "sensy/eval.hpp"
#include "sensy/features.hpp"
#include "sensy/forest.hpp"
#include "sensy/gate.hpp"
#include "sensy/interrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Settings: defaults < config file (--config / SENSY_CONFIG) < CLI flags
// ---------------------------------------------------------------------------

struct EmbedderSettings {
    std::string kind = "hashing"; // hashing | remote
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::string url;
    std::string model;
    std::string token;
    int retries = 3;
};

struct AppSettings {
    fs::path keywords = "data/keywords.json";
    fs::path pos_lexicon = "data/pos_lexicon.tsv";
    fs::path valence_lexicon = "data/valence_lexicon.tsv";
    EmbedderSettings embedder;
    sensy::ForestHyperparams hyperparams;
    double threshold = 0.5;
};

void overlay_config(AppSettings& settings, const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw sensy::ConfigError("config: cannot open " + path.string());
    }
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw sensy::ConfigError("config: " + path.string() + ": " + e.what());
    }

    if (cfg.contains("keywords")) settings.keywords = cfg["keywords"].get<std::string>();
    if (cfg.contains("pos_lexicon")) settings.pos_lexicon = cfg["pos_lexicon"].get<std::string>();
    if (cfg.contains("valence_lexicon")) {
        settings.valence_lexicon = cfg["valence_lexicon"].get<std::string>();
    }
    if (cfg.contains("threshold")) settings.threshold = cfg["threshold"].get<double>();

    if (cfg.contains("embedder")) {
        const auto& e = cfg["embedder"];
        if (e.contains("kind")) settings.embedder.kind = e["kind"].get<std::string>();
        if (e.contains("dim")) settings.embedder.dim = e["dim"].get<std::size_t>();
        if (e.contains("seed")) settings.embedder.seed = e["seed"].get<std::uint64_t>();
        if (e.contains("url")) settings.embedder.url = e["url"].get<std::string>();
        if (e.contains("model")) settings.embedder.model = e["model"].get<std::string>();
        if (e.contains("retries")) settings.embedder.retries = e["retries"].get<int>();
    }
    if (cfg.contains("hyperparams")) {
        const auto& h = cfg["hyperparams"];
        auto& hp = settings.hyperparams;
        if (h.contains("n_trees")) hp.n_trees = h["n_trees"].get<std::size_t>();
        if (h.contains("max_depth") && !h["max_depth"].is_null()) {
            hp.max_depth = h["max_depth"].get<std::size_t>();
        }
        if (h.contains("min_samples_leaf")) {
            hp.min_samples_leaf = h["min_samples_leaf"].get<std::size_t>();
        }
        if (h.contains("bootstrap")) hp.bootstrap = h["bootstrap"].get<bool>();
        if (h.contains("seed")) hp.seed = h["seed"].get<std::uint64_t>();
        if (h.contains("features_per_split")) {
            const auto& f = h["features_per_split"];
            if (f.is_string() && f == "sqrt") {
                hp.features_per_split = sensy::FeaturesPerSplit::sqrt_dim();
            } else if (f.is_string() && f == "all") {
                hp.features_per_split = sensy::FeaturesPerSplit::all();
            } else if (f.is_number_unsigned()) {
                hp.features_per_split = sensy::FeaturesPerSplit::fixed(f.get<std::size_t>());
            } else {
                throw sensy::ConfigError("config: features_per_split must be "
                                         "\"sqrt\", \"all\" or an integer");
            }
        }
    }
}

sensy::Featurizer build_featurizer(const AppSettings& settings) {
    std::shared_ptr<sensy::EmbeddingProvider> provider;
    if (settings.embedder.kind == "hashing") {
        provider = std::make_shared<sensy::HashingEmbedder>(settings.embedder.dim,
                                                            settings.embedder.seed);
    } else if (settings.embedder.kind == "remote") {
        sensy::RemoteEmbedderConfig cfg;
        cfg.url = settings.embedder.url;
        cfg.model = settings.embedder.model;
        cfg.auth_token = settings.embedder.token;
        cfg.dimension = settings.embedder.dim;
        cfg.max_retries = settings.embedder.retries;
        provider = std::make_shared<sensy::RemoteEmbedder>(
            sensy::RemoteEmbedderConfig::from_env(std::move(cfg)));
    } else {
        throw sensy::ConfigError("embedder kind must be \"hashing\" or \"remote\", got \"" +
                                 settings.embedder.kind + "\"");
    }
    return sensy::Featurizer(sensy::KeywordIndex::load(settings.keywords),
                             sensy::PosLexicon::load(settings.pos_lexicon),
                             sensy::ValenceLexicon::load(settings.valence_lexicon),
                             std::move(provider));
}

sensy::DatasetFormat parse_format(const std::string& name, const fs::path& path) {
    if (name == "json") return sensy::DatasetFormat::json;
    if (name == "csv") return sensy::DatasetFormat::csv;
    return sensy::format_from_path(path);
}

std::vector<int> labels_of(const sensy::Dataset& ds) {
    std::vector<int> y;
    y.reserve(ds.prompts.size());
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        if (!ds.prompts[i].label.has_value()) {
            throw sensy::ValidationError("record " + std::to_string(i) + " (id \"" +
                                         ds.prompts[i].id + "\") is unlabeled");
        }
        y.push_back(static_cast<int>(*ds.prompts[i].label));
    }
    return y;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw sensy::ParseError("cannot write " + path.string());
    }
    out << content;
}

void emit_report(const sensy::EvalReport& report, const fs::path& json_path,
                 const fs::path& table_path) {
    const std::string table = sensy::report_to_table(report);
    std::cout << table;
    if (!json_path.empty()) write_text_file(json_path, sensy::report_to_json(report));
    if (!table_path.empty()) write_text_file(table_path, table);
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

int cmd_ingest(const fs::path& in, const std::string& in_format, const fs::path& out,
               const std::string& out_format) {
    const sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    if (!out.empty()) {
        sensy::save_dataset(ds, out, parse_format(out_format, out));
    }
    const auto stats = sensy::dataset_stats(ds);
    std::cout << "loaded " << stats.total << " prompts (" << stats.sensitive << " sensitive, "
              << stats.non_sensitive << " non-sensitive, " << stats.unlabeled
              << " unlabeled)\n";
    return 0;
}

int cmd_categorize(const AppSettings& settings, const fs::path& in,
                   const std::string& in_format, const fs::path& out,
                   const std::string& out_format, bool overwrite) {
    sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    const auto index = sensy::KeywordIndex::load(settings.keywords);
    std::size_t assigned = 0;
    for (sensy::Prompt& p : ds.prompts) {
        if (!p.label.has_value() || *p.label != sensy::Label::sensitive) continue;
        if (!p.categories.empty() && !overwrite) continue;
        p.categories = sensy::categorize(p, index);
        ++assigned;
    }
    sensy::save_dataset(ds, out, parse_format(out_format, out));
    std::cout << "categorized " << assigned << " sensitive prompts -> " << out.string()
              << "\n";
    return 0;
}

int cmd_stats(const fs::path& in, const std::string& in_format, const fs::path& json_out) {
    const sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    const auto stats = sensy::dataset_stats(ds);

    std::cout << "dataset: " << ds.name << "\n";
    std::cout << "total: " << stats.total << "\n";
    std::cout << "sensitive: " << stats.sensitive << "\n";
    std::cout << "non_sensitive: " << stats.non_sensitive << "\n";
    std::cout << "unlabeled: " << stats.unlabeled << "\n";
    for (const auto& [source, count] : stats.per_source) {
        std::cout << "source " << sensy::to_string(source) << ": " << count << "\n";
    }
    for (const auto& [category, count] : stats.per_category) {
        std::cout << "category " << sensy::to_string(category) << ": " << count << "\n";
    }

    if (!json_out.empty()) {
        nlohmann::ordered_json obj;
        obj["dataset"] = ds.name;
        obj["total"] = stats.total;
        obj["sensitive"] = stats.sensitive;
        obj["non_sensitive"] = stats.non_sensitive;
        obj["unlabeled"] = stats.unlabeled;
        for (const auto& [source, count] : stats.per_source) {
            obj["per_source"][std::string(sensy::to_string(source))] = count;
        }
        for (const auto& [category, count] : stats.per_category) {
            obj["per_category"][std::string(sensy::to_string(category))] = count;
        }
        write_text_file(json_out, obj.dump(2) + "\n");
    }
    return 0;
}

int cmd_featurize(const AppSettings& settings, const fs::path& in,
                  const std::string& in_format, const fs::path& out) {
    const sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    const auto featurizer = build_featurizer(settings);
    const auto X = featurizer.featurize_all(ds);

    std::string content = "id";
    for (std::size_t j = 0; j < featurizer.dimension(); ++j) {
        content += ",x" + std::to_string(j);
    }
    content += "\n";
    char buf[40];
    for (std::size_t i = 0; i < X.size(); ++i) {
        content += ds.prompts[i].id;
        for (double v : X[i]) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            content += buf;
        }
        content += "\n";
    }
    write_text_file(out, content);
    std::cout << "featurized " << X.size() << " prompts, dimension "
              << featurizer.dimension() << " -> " << out.string() << "\n";
    return 0;
}

int cmd_train(const AppSettings& settings, const fs::path& in, const std::string& in_format,
              const fs::path& out) {
    const sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    const auto featurizer = build_featurizer(settings);
    const auto X = featurizer.featurize_all(ds);
    const auto y = labels_of(ds);

    const sensy::ForestModel model = sensy::train_forest(X, y, settings.hyperparams);
    sensy::save_model(model, out);
    std::cout << "trained " << model.trees.size() << " trees on " << X.size()
              << " prompts (dim " << model.feature_dim << ", class balance "
              << model.training_counts.class0 << "/" << model.training_counts.class1
              << ")\n";
    std::cout << "fingerprint: " << sensy::model_fingerprint(model) << "\n";
    std::cout << "model: " << out.string() << "\n";
    return 0;
}

int cmd_eval_cv(const AppSettings& settings, const fs::path& in,
                const std::string& in_format, std::size_t folds, std::uint64_t seed,
                const fs::path& json_out, const fs::path& table_out) {
    const sensy::Dataset ds = sensy::load_dataset(in, parse_format(in_format, in));
    const auto featurizer = build_featurizer(settings);
    sensy::PipelineConfig pipeline;
    pipeline.hyperparams = settings.hyperparams;
    pipeline.decision_threshold = settings.threshold;
    const auto report = sensy::cross_validate(ds, featurizer, pipeline, folds, seed);
    emit_report(report, json_out, table_out);
    return 0;
}

int cmd_eval_cross(const AppSettings& settings, const fs::path& train_path,
                   const fs::path& test_path, const fs::path& json_out,
                   const fs::path& table_out) {
    const auto train_ds =
        sensy::load_dataset(train_path, sensy::format_from_path(train_path));
    const auto test_ds = sensy::load_dataset(test_path, sensy::format_from_path(test_path));
    const auto featurizer = build_featurizer(settings);
    sensy::PipelineConfig pipeline;
    pipeline.hyperparams = settings.hyperparams;
    pipeline.decision_threshold = settings.threshold;
    const auto report = sensy::cross_dataset_eval(train_ds, test_ds, featurizer, pipeline);
    emit_report(report, json_out, table_out);
    return 0;
}

int cmd_classify(const AppSettings& settings, const fs::path& model_path, std::string text) {
    if (text.empty()) {
        std::stringstream buffer;
        buffer << std::cin.rdbuf();
        text = buffer.str();
    }
    const auto featurizer = build_featurizer(settings);
    const sensy::GateEngine engine(sensy::load_model(model_path));
    const auto verdict = sensy::classify_text(text, engine, featurizer, settings.threshold);

    nlohmann::ordered_json out;
    out["sensitive"] = verdict.sensitive;
    out["probability"] = verdict.probability;
    nlohmann::ordered_json categories = nlohmann::ordered_json::array();
    for (sensy::Category c : verdict.categories) {
        categories.push_back(std::string(sensy::to_string(c)));
    }
    out["categories"] = std::move(categories);
    out["model_fingerprint"] = verdict.model_fingerprint;
    out["elapsed_us"] = verdict.elapsed.count();
    std::cout << out.dump(2) << "\n";
    return verdict.sensitive ? 2 : 0; // shell-friendly: 2 flags a sensitive prompt
}

int cmd_interrogate(const fs::path& in, const sensy::InterrogationConfig& cfg,
                    const fs::path& out) {
    const sensy::Dataset prompts = sensy::load_interrogation_input(in);
    const auto records = sensy::interrogate_corpus(prompts, cfg);
    sensy::save_interrogation(records, out);

    std::size_t ok = 0;
    std::size_t total = 0;
    for (const auto& record : records) {
        for (const auto& response : record.responses) {
            ++total;
            ok += response.status == sensy::ResponseStatus::ok ? 1 : 0;
        }
    }
    std::cout << "interrogated " << prompts.prompts.size() << " prompts x "
              << cfg.repetitions << " repetitions; " << ok << "/" << total
              << " responses ok -> " << out.string() << "\n";
    return 0;
}

int cmd_adequacy_report(const fs::path& annotations_path, const fs::path& dataset_path,
                        const std::vector<std::string>& models, int repetitions,
                        const fs::path& json_out, const fs::path& table_out) {
    const auto ds = sensy::load_dataset(dataset_path, sensy::format_from_path(dataset_path));
    const auto annotations = sensy::load_annotations(annotations_path, &ds);
    const auto table = sensy::adequacy_table(annotations, ds, models, repetitions);

    const std::string text = sensy::adequacy_table_to_text(table);
    std::cout << text;
    const auto rates = sensy::adequacy_rate(annotations, ds, sensy::AdequacyGroupBy::model);
    for (const auto& [model, rate] : rates) {
        std::printf("adequacy rate %s: %.4f\n", model.c_str(), rate);
    }
    if (!json_out.empty()) write_text_file(json_out, sensy::adequacy_table_to_json(table));
    if (!table_out.empty()) write_text_file(table_out, text);
    return 0;
}

int cmd_serve(const AppSettings& settings, const fs::path& model_path,
              const std::string& host, int port, const std::string& mode,
              std::size_t max_body, bool watch) {
    sensy::GateServiceConfig cfg;
    cfg.host = host;
    cfg.port = port;
    cfg.model_path = model_path;
    cfg.max_body_bytes = max_body;
    cfg.watch_model = watch;
    const auto gate_mode = sensy::gate_mode_from_string(mode);
    if (!gate_mode) {
        throw sensy::ConfigError("mode must be one of annotate, block, allow");
    }
    cfg.default_policy.mode = *gate_mode;
    cfg.default_policy.threshold = settings.threshold;

    sensy::GateService service(std::move(cfg), build_featurizer(settings));
    std::cout << "serving on http://" << host << ":" << port << " (model "
              << service.fingerprint() << ")\n"
              << "endpoints: POST /v1/classify, POST /v1/gate, GET /healthz\n";
    service.run();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    // The config file must be known before option defaults are fixed.
    AppSettings settings;
    try {
        fs::path config_path;
        if (const char* env = std::getenv("SENSY_CONFIG")) config_path = env;
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string_view(argv[i]) == "--config") config_path = argv[i + 1];
        }
        if (!config_path.empty()) overlay_config(settings, config_path);
    } catch (const sensy::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"sensy: prompt-sensitivity screening toolkit"};
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON config file")->envname("SENSY_CONFIG");

    auto add_shared = [&settings](CLI::App* cmd) {
        cmd->add_option("--keywords", settings.keywords, "keyword index JSON")
            ->envname("SENSY_KEYWORDS")
            ->capture_default_str();
        cmd->add_option("--pos-lexicon", settings.pos_lexicon, "POS lexicon TSV")
            ->envname("SENSY_POS_LEXICON")
            ->capture_default_str();
        cmd->add_option("--valence-lexicon", settings.valence_lexicon, "valence lexicon TSV")
            ->envname("SENSY_VALENCE_LEXICON")
            ->capture_default_str();
        cmd->add_option("--embed-kind", settings.embedder.kind,
                        "embedding provider: hashing | remote")
            ->capture_default_str();
        cmd->add_option("--embed-dim", settings.embedder.dim, "embedding dimension")
            ->capture_default_str();
        cmd->add_option("--embed-seed", settings.embedder.seed, "hashing embedder seed")
            ->capture_default_str();
        cmd->add_option("--embed-url", settings.embedder.url, "remote embeddings endpoint")
            ->envname("SENSY_EMBED_URL");
        cmd->add_option("--embed-model", settings.embedder.model, "remote embedding model id")
            ->envname("SENSY_EMBED_MODEL");
        cmd->add_option("--embed-token", settings.embedder.token, "remote auth token")
            ->envname("SENSY_EMBED_TOKEN");
    };
    auto add_hyper = [&settings](CLI::App* cmd) {
        cmd->add_option("--trees", settings.hyperparams.n_trees, "number of trees")
            ->capture_default_str();
        cmd->add_option("--max-depth", settings.hyperparams.max_depth,
                        "depth limit (omit for unlimited)");
        cmd->add_option("--min-leaf", settings.hyperparams.min_samples_leaf,
                        "min samples per leaf")
            ->capture_default_str();
        cmd->add_flag("--no-bootstrap",
                      [&settings](std::int64_t) { settings.hyperparams.bootstrap = false; },
                      "grow every tree on the full training set");
        cmd->add_option("--seed", settings.hyperparams.seed, "training seed")
            ->capture_default_str();
        cmd->add_option("--threshold", settings.threshold, "decision threshold")
            ->capture_default_str();
    };

    // ingest
    fs::path in_path, out_path;
    std::string in_format = "auto", out_format = "auto";
    auto* ingest = app.add_subcommand("ingest", "load, validate and convert a dataset");
    ingest->add_option("--in", in_path, "input dataset")->required();
    ingest->add_option("--in-format", in_format, "json | csv | auto");
    ingest->add_option("--out", out_path, "output dataset (optional)");
    ingest->add_option("--out-format", out_format, "json | csv | auto");

    // categorize
    bool overwrite = false;
    auto* categorize = app.add_subcommand(
        "categorize", "assign keyword-based categories to sensitive prompts");
    categorize->add_option("--in", in_path, "input dataset")->required();
    categorize->add_option("--in-format", in_format, "json | csv | auto");
    categorize->add_option("--out", out_path, "output dataset")->required();
    categorize->add_option("--out-format", out_format, "json | csv | auto");
    categorize->add_flag("--overwrite", overwrite, "recompute categories already present");
    add_shared(categorize);

    // stats
    fs::path json_out, table_out;
    auto* stats = app.add_subcommand("stats", "dataset composition statistics");
    stats->add_option("--in", in_path, "input dataset")->required();
    stats->add_option("--in-format", in_format, "json | csv | auto");
    stats->add_option("--json", json_out, "write statistics JSON here");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "write the feature matrix as CSV");
    featurize->add_option("--in", in_path, "input dataset")->required();
    featurize->add_option("--in-format", in_format, "json | csv | auto");
    featurize->add_option("--out", out_path, "output CSV")->required();
    add_shared(featurize);

    // train
    auto* train = app.add_subcommand("train", "train the Random Forest classifier");
    train->add_option("--in", in_path, "labeled dataset")->required();
    train->add_option("--in-format", in_format, "json | csv | auto");
    train->add_option("--out", out_path, "model file")->required();
    add_shared(train);
    add_hyper(train);

    // eval-cv
    std::size_t folds = 10;
    std::uint64_t cv_seed = 0;
    auto* eval_cv =
        app.add_subcommand("eval-cv", "stratified k-fold cross-validation report");
    eval_cv->add_option("--in", in_path, "labeled dataset")->required();
    eval_cv->add_option("--in-format", in_format, "json | csv | auto");
    eval_cv->add_option("--folds", folds, "fold count")->capture_default_str();
    eval_cv->add_option("--cv-seed", cv_seed, "fold assignment seed")->capture_default_str();
    eval_cv->add_option("--json", json_out, "write the report JSON here");
    eval_cv->add_option("--table", table_out, "write the text table here");
    add_shared(eval_cv);
    add_hyper(eval_cv);

    // eval-cross
    fs::path train_path, test_path;
    auto* eval_cross =
        app.add_subcommand("eval-cross", "train on one dataset, evaluate on another");
    eval_cross->add_option("--train", train_path, "training dataset")->required();
    eval_cross->add_option("--test", test_path, "test dataset")->required();
    eval_cross->add_option("--json", json_out, "write the report JSON here");
    eval_cross->add_option("--table", table_out, "write the text table here");
    add_shared(eval_cross);
    add_hyper(eval_cross);

    // classify
    fs::path model_path;
    std::string text;
    auto* classify = app.add_subcommand("classify", "classify one prompt (text or stdin)");
    classify->add_option("--model", model_path, "model file")
        ->envname("SENSY_MODEL")
        ->required();
    classify->add_option("text", text, "prompt text (reads stdin when omitted)");
    add_shared(classify);
    classify->add_option("--threshold", settings.threshold, "decision threshold")
        ->capture_default_str();

    // interrogate
    sensy::InterrogationConfig icfg;
    double temperature = -1.0;
    auto* interrogate =
        app.add_subcommand("interrogate", "pose prompts to a chat endpoint with retries");
    interrogate->add_option("--in", in_path, "input JSON: [{id, text, category}]")
        ->required();
    interrogate->add_option("--endpoint", icfg.endpoint_url, "chat endpoint origin")
        ->envname("SENSY_ENDPOINT")
        ->required();
    interrogate->add_option("--model", icfg.model_id, "chat model id")->required();
    interrogate->add_option("--reps", icfg.repetitions, "repetitions per prompt")
        ->capture_default_str();
    interrogate->add_option("--max-words", icfg.max_words, "word cap per answer")
        ->capture_default_str();
    interrogate->add_option("--max-attempts", icfg.max_attempts, "attempts per repetition")
        ->capture_default_str();
    interrogate->add_option("--system-message", icfg.system_message, "system message")
        ->capture_default_str();
    interrogate->add_option("--uncertain", icfg.uncertain_patterns,
                            "case-insensitive regex marking uncertain answers");
    interrogate->add_option("--temperature", temperature,
                            "sampling temperature (endpoint default when omitted)");
    interrogate->add_option("--concurrency", icfg.concurrency,
                            "prompt worker-pool width")
        ->capture_default_str();
    interrogate->add_option("--out", out_path, "output records JSON")->required();

    // adequacy-report
    fs::path annotations_path, dataset_path;
    std::vector<std::string> models;
    int repetitions = 3;
    auto* adequacy =
        app.add_subcommand("adequacy-report", "bucket adequacy annotations per category");
    adequacy->add_option("--annotations", annotations_path, "annotation CSV")->required();
    adequacy->add_option("--dataset", dataset_path, "dataset the prompts come from")
        ->required();
    adequacy->add_option("--models", models, "model ids (repeatable)")->required();
    adequacy->add_option("--reps", repetitions, "responses per prompt")
        ->capture_default_str();
    adequacy->add_option("--json", json_out, "write the table JSON here");
    adequacy->add_option("--table", table_out, "write the text table here");

    // serve
    std::string host = "127.0.0.1";
    int port = 8787;
    std::string mode = "annotate";
    std::size_t max_body = 32 * 1024;
    bool no_watch = false;
    auto* serve = app.add_subcommand("serve", "run the HTTP classification gateway");
    serve->add_option("--model", model_path, "model file")
        ->envname("SENSY_MODEL")
        ->required();
    serve->add_option("--host", host, "bind address")
        ->envname("SENSY_HOST")
        ->capture_default_str();
    serve->add_option("--port", port, "bind port")->envname("SENSY_PORT")->capture_default_str();
    serve->add_option("--mode", mode, "default policy: annotate | block | allow")
        ->capture_default_str();
    serve->add_option("--max-body", max_body, "request body cap in bytes")
        ->capture_default_str();
    serve->add_flag("--no-watch", no_watch, "disable model hot-reload");
    add_shared(serve);
    serve->add_option("--threshold", settings.threshold, "default decision threshold")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(in_path, in_format, out_path, out_format);
        if (categorize->parsed()) {
            return cmd_categorize(settings, in_path, in_format, out_path, out_format,
                                  overwrite);
        }
        if (stats->parsed()) return cmd_stats(in_path, in_format, json_out);
        if (featurize->parsed()) return cmd_featurize(settings, in_path, in_format, out_path);
        if (train->parsed()) return cmd_train(settings, in_path, in_format, out_path);
        if (eval_cv->parsed()) {
            return cmd_eval_cv(settings, in_path, in_format, folds, cv_seed, json_out,
                               table_out);
        }
        if (eval_cross->parsed()) {
            return cmd_eval_cross(settings, train_path, test_path, json_out, table_out);
        }
        if (classify->parsed()) return cmd_classify(settings, model_path, text);
        if (interrogate->parsed()) {
            if (temperature >= 0.0) icfg.temperature = temperature;
            return cmd_interrogate(in_path, icfg, out_path);
        }
        if (adequacy->parsed()) {
            return cmd_adequacy_report(annotations_path, dataset_path, models, repetitions,
                                       json_out, table_out);
        }
        if (serve->parsed()) {
            return cmd_serve(settings, model_path, host, port, mode, max_body, !no_watch);
        }
    } catch (const sensy::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
