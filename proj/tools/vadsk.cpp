// vadsk: keyword-based video anomaly detection pipeline.
//
//   vadsk describe --config run.ini      warm the description cache
//   vadsk induce   --config run.ini      keyword model from sampled frames
//   vadsk train    --config run.ini      classifier on the train split
//   vadsk eval     --config run.ini      AUROC report on the test split
//   vadsk infer    --config run.ini FRAME
//
// Exit codes: 0 ok, 1 config, 2 data, 3 provider, 4 degenerate math.

#include "vadsk/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<double> threshold;
    std::optional<std::string> provider_url;
    std::optional<std::string> stub;
};

void add_common(CLI::App& sub, CommonOptions& o) {
    sub.add_option("-c,--config", o.config, "Pipeline config file (INI)")->required();
    sub.add_option("--seed", o.seed, "Override run.seed");
    sub.add_option("-o,--output-dir", o.output_dir, "Override run.output_dir");
    sub.add_option("--threshold", o.threshold, "Override run.threshold");
    sub.add_option("--provider-url", o.provider_url, "Override provider.url");
    sub.add_option("--stub", o.stub, "Answer from a frame_id<TAB>text map instead of a server");
}

vadsk::PipelineConfig load(const CommonOptions& o) {
    vadsk::ConfigOverrides ov;
    ov.seed = o.seed;
    if (o.output_dir) ov.output_dir = *o.output_dir;
    ov.threshold = o.threshold;
    ov.provider_url = o.provider_url;
    if (o.stub) ov.stub_map = *o.stub;
    return vadsk::load_pipeline_config(o.config, ov);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyword-based video anomaly detection"};
    app.require_subcommand(1);
    CommonOptions opts;
    std::string frame;

    auto* describe = app.add_subcommand("describe", "Generate and cache descriptions for every frame in the run");
    auto* induce = app.add_subcommand("induce", "Derive keyword weights from sampled normal/anomalous frames");
    auto* train = app.add_subcommand("train", "Train the classifier on the train split");
    auto* eval = app.add_subcommand("eval", "Score the test split and write the AUROC report");
    auto* infer = app.add_subcommand("infer", "Classify one frame and explain the decision");
    for (auto* sub : {describe, induce, train, eval, infer}) add_common(*sub, opts);
    infer->add_option("frame", frame, "Manifest frame id or image path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        vadsk::Pipeline pipeline(load(opts));
        if (describe->parsed()) {
            const auto result = pipeline.describe();
            std::cout << "described " << result.records.size() << " frames, " << result.failures.size()
                      << " failures, " << pipeline.provider().request_count() << " provider requests\n";
            for (const auto& f : result.failures) std::cout << "  " << f.frame_id << ": " << f.message << '\n';
        } else if (induce->parsed()) {
            const auto model = pipeline.induce();
            std::cout << vadsk::format_keyword_listing(model, 20);
        } else if (train->parsed()) {
            const auto model = pipeline.train();
            std::cout << "chosen fold " << model.chosen_fold << ", best validation loss "
                      << vadsk::format_double(model.fold_metrics[model.chosen_fold].best_val_loss) << '\n';
        } else if (eval->parsed()) {
            std::cout << vadsk::format_summary(pipeline.eval());
        } else if (infer->parsed()) {
            std::cout << vadsk::Pipeline::to_json(pipeline.infer(frame)).dump(2) << '\n';
        }
    } catch (const vadsk::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return vadsk::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
