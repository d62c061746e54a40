// Command-line front end: synthetic data generation, training, evaluation
// and prediction as reproducible seeded runs. Human-readable progress goes
// to stderr; machine-readable key=value results go to stdout.

#include "edbn/data.hpp"
#include "edbn/error.hpp"
#include "edbn/metrics.hpp"
#include "edbn/model.hpp"
#include "edbn/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace {

struct UsageError : edbn::Error {
    using Error::Error;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Plain key=value lines, '#' starts a comment. Keys are the long flag names
// without the leading dashes; anything given on the command line wins.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw edbn::IoError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || key == "config")
            throw UsageError(path + ":" + std::to_string(line_no) + ": bad config key");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw UsageError(path + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
        if (opt->count() > 0) continue; // command line overrides the file
        opt->add_result(val);
        opt->run_callback();
    }
}

struct GenArgs {
    std::string out;
    std::string config;
    edbn::SynthSpec spec;
};

struct TrainArgs {
    std::string data;
    std::string model_out;
    std::string report_out;
    std::string config;
    edbn::TrainConfig cfg;
    std::string pretrain = "both";
    std::vector<std::string> features_include;
    bool impute_zero = false;
};

struct EvalArgs {
    std::string model;
    std::string data;
    std::string config;
    bool per_time = false;
    bool impute_zero = false;
};

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string config;
    bool impute_zero = false;
};

void kv(const char* key, double value) {
    std::printf("%s=%.9g\n", key, value);
}

void kv(const char* key, const std::string& value) {
    std::printf("%s=%s\n", key, value.c_str());
}

edbn::Dataset load_for_model(const edbn::SavedModel& m, const std::string& path, bool impute_zero) {
    edbn::CsvOptions opts;
    opts.impute_zero = impute_zero;
    if (!m.feature_names.empty())
        opts.include_features = m.feature_names;
    else
        opts.expected_feature_count = m.net.config.feature_count;
    edbn::Dataset ds = edbn::load_csv(path, opts);
    // The model's training vocabulary decides the embedding rows; ids it
    // never saw fall back to the OOV row.
    ds.vocab = edbn::IdVocab::from_raw_ids(m.vocab_raw_ids);
    return ds;
}

int run_gen(const GenArgs& a) {
    edbn::SynthData synth = edbn::generate_synthetic(a.spec);
    edbn::write_csv(synth.dataset, a.out);
    std::fprintf(stderr, "wrote %zu rows, %zu ids, %zu features to %s\n", synth.dataset.rows(),
                 a.spec.distinct_ids, a.spec.feature_count, a.out.c_str());
    kv("rows", static_cast<double>(synth.dataset.rows()));
    kv("out", a.out);
    return 0;
}

int run_train(const TrainArgs& a) {
    edbn::TrainConfig cfg = a.cfg;
    cfg.pretrain_mode = edbn::pretrain_mode_from_string(a.pretrain);

    edbn::CsvOptions opts;
    opts.impute_zero = a.impute_zero;
    opts.include_features = a.features_include;
    edbn::Dataset ds = edbn::load_csv(a.data, opts);
    std::fprintf(stderr, "loaded %zu rows, %zu features, %zu ids from %s\n", ds.rows(), ds.feature_count(),
                 ds.vocab.size() - 1, a.data.c_str());

    edbn::TrainResult res = edbn::train(cfg, ds);
    const edbn::ModelConfig& mc = res.net.config;
    if (mc.compression_ratio_low())
        std::fprintf(stderr, "warning: embedding compression ratio %.2f is below 20\n",
                     mc.compression_ratio());
    for (const auto& e : res.report.epochs)
        std::fprintf(stderr, "%s epoch %zu: train_loss=%.6g val_pearson=%.6g val_mse=%.6g lr=%.6g\n",
                     e.phase.c_str(), e.epoch, e.train_loss, e.val_pearson, e.val_mse, e.lr);
    std::fprintf(stderr, "trained in %.1fs, checksum %016llx\n", res.report.wall_seconds,
                 static_cast<unsigned long long>(res.report.param_checksum));

    if (!a.model_out.empty()) {
        edbn::save_model(res.net, res.vocab_raw_ids, res.feature_names, a.model_out);
        kv("model", a.model_out);
    }
    if (!a.report_out.empty()) {
        edbn::write_report_csv(res.report, a.report_out);
        kv("report", a.report_out);
    }
    kv("param_count", static_cast<double>(edbn::param_count(mc)));
    kv("compression_ratio", mc.compression_ratio());
    if (!res.report.epochs.empty()) {
        const auto& last = res.report.epochs.back();
        kv("final_train_loss", last.train_loss);
        kv("val_pearson", last.val_pearson);
        kv("val_mse", last.val_mse);
    }
    return 0;
}

int run_eval(const EvalArgs& a) {
    edbn::SavedModel m = edbn::load_model(a.model);
    edbn::Dataset ds = load_for_model(m, a.data, a.impute_zero);
    edbn::MetricReport r = edbn::evaluate(m.net, ds);
    kv("pearson", r.pearson);
    kv("mse", r.mse);
    kv("n", static_cast<double>(r.n));
    if (a.per_time) kv("per_time_pearson", edbn::evaluate_per_time(m.net, ds));
    return 0;
}

int run_predict(const PredictArgs& a) {
    edbn::SavedModel m = edbn::load_model(a.model);
    edbn::Dataset ds = load_for_model(m, a.data, a.impute_zero);
    std::vector<float> pred = edbn::predict_all(m.net, ds);

    std::FILE* out = std::fopen(a.out.c_str(), "w");
    if (!out) throw edbn::IoError("cannot open for writing: " + a.out);
    std::fputs("row_id,prediction\n", out);
    for (std::size_t i = 0; i < pred.size(); ++i)
        std::fprintf(out, "%s,%.9g\n", ds.row_id[i].c_str(), static_cast<double>(pred[i]));
    std::fclose(out);
    kv("rows", static_cast<double>(pred.size()));
    kv("out", a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-branch tabular regressor: embedding + dense-feature network"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
    cgen->add_option("--out", gen.out, "output CSV path")->required();
    cgen->add_option("--rows", gen.spec.rows, "number of rows");
    cgen->add_option("--ids", gen.spec.distinct_ids, "number of distinct investment ids");
    cgen->add_option("--features", gen.spec.feature_count, "number of feature columns");
    cgen->add_option("--time-blocks", gen.spec.time_blocks, "distinct time_id blocks");
    cgen->add_option("--weight-scale", gen.spec.weight_scale, "stddev of generating weights");
    cgen->add_option("--id-sigma", gen.spec.id_sigma, "stddev of the per-id effect");
    cgen->add_option("--noise-sigma", gen.spec.noise_sigma, "stddev of additive noise");
    cgen->add_option("--nonlinearity", gen.spec.nonlinearity_scale, "scale of the tanh interaction");
    cgen->add_option("--seed", gen.spec.seed, "generator seed");
    cgen->add_option("--config", gen.config, "key=value settings file");

    TrainArgs tr;
    auto* ctrain = app.add_subcommand("train", "train a model on a schema CSV");
    ctrain->add_option("--data", tr.data, "training CSV")->required();
    ctrain->add_option("--model-out", tr.model_out, "model file to write");
    ctrain->add_option("--report-out", tr.report_out, "per-epoch CSV log to write");
    ctrain->add_option("--lr", tr.cfg.lr_base, "base learning rate");
    ctrain->add_option("--batch-size", tr.cfg.batch_size, "mini-batch size");
    ctrain->add_option("--epochs", tr.cfg.total_epochs, "total epochs across phases");
    ctrain->add_option("--warmup-steps", tr.cfg.warmup_steps, "linear warm-up steps");
    ctrain->add_option("--embed-dim", tr.cfg.embed_dim, "embedding width (0 = auto)");
    ctrain->add_option("--pretrain", tr.pretrain, "branch pre-training: none|dense|id|both");
    ctrain->add_option("--pretrain-epochs", tr.cfg.pretrain_epochs, "epochs per pre-trained branch");
    ctrain->add_option("--joint-epochs", tr.cfg.joint_epochs, "joint epochs (-1 = total minus pretrain)");
    ctrain->add_option("--val-frac", tr.cfg.val_fraction, "fraction of time ids held out");
    ctrain->add_option("--seed", tr.cfg.seed, "run seed");
    ctrain->add_flag("--freeze-pretrained", tr.cfg.freeze_pretrained,
                     "train only the head during the joint phase");
    ctrain->add_option("--features-include", tr.features_include,
                       "comma-separated feature columns to keep")
        ->delimiter(',');
    ctrain->add_flag("--impute-zero", tr.impute_zero, "zero-fill unparseable feature cells");
    ctrain->add_option("--threads", tr.cfg.threads, "kernel threads (results are identical)");
    ctrain->add_option("--config", tr.config, "key=value settings file");

    EvalArgs ev;
    auto* ceval = app.add_subcommand("eval", "evaluate a model on a schema CSV");
    ceval->add_option("--model", ev.model, "model file")->required();
    ceval->add_option("--data", ev.data, "evaluation CSV")->required();
    ceval->add_flag("--per-time", ev.per_time, "also report the mean per-time_id pearson");
    ceval->add_flag("--impute-zero", ev.impute_zero, "zero-fill unparseable feature cells");
    ceval->add_option("--config", ev.config, "key=value settings file");

    PredictArgs pr;
    auto* cpred = app.add_subcommand("predict", "write row_id,prediction CSV for a dataset");
    cpred->add_option("--model", pr.model, "model file")->required();
    cpred->add_option("--data", pr.data, "input CSV")->required();
    cpred->add_option("--out", pr.out, "output CSV path")->required();
    cpred->add_flag("--impute-zero", pr.impute_zero, "zero-fill unparseable feature cells");
    cpred->add_option("--config", pr.config, "key=value settings file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cgen->parsed() && !gen.config.empty()) apply_config_file(cgen, gen.config);
        if (ctrain->parsed() && !tr.config.empty()) apply_config_file(ctrain, tr.config);
        if (ceval->parsed() && !ev.config.empty()) apply_config_file(ceval, ev.config);
        if (cpred->parsed() && !pr.config.empty()) apply_config_file(cpred, pr.config);

        if (cgen->parsed()) return run_gen(gen);
        if (ctrain->parsed()) return run_train(tr);
        if (ceval->parsed()) return run_eval(ev);
        if (cpred->parsed()) return run_predict(pr);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const edbn::SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const edbn::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
