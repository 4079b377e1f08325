#pragma once

// Synthetic surveillance run: manifest, placeholder images, a stub
// description map and a pipeline config, all under one directory.
//
// Anomalous descriptions mention "bicycle" with probability 0.9 and one
// secondary unusual activity with probability 0.6; normal descriptions
// never mention either.

#include "support.hpp"

#include "vadsk/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace vadsk::testing {

struct SyntheticOptions {
    std::size_t n_frames = 2000;
    std::size_t n_videos = 20;
    double anomalous_fraction = 0.3;
    double bicycle_rate = 0.9;
    double secondary_rate = 0.6;
    std::uint64_t seed = 1234;
    /// Every frame gets the same description (degenerate corpus).
    bool identical_descriptions = false;
    /// Cap on anomalous frames; 0 means no cap.
    std::size_t max_anomalous = 0;
    int max_concurrency = 4;
    std::string extra_config;
};

struct SyntheticRun {
    fs::path dir;
    fs::path manifest;
    fs::path stub;
    fs::path config;
    std::size_t n_anomalous = 0;
};

inline SyntheticRun make_synthetic_run(const fs::path& dir, const SyntheticOptions& opt = {}) {
    static constexpr std::array<const char*, 6> kNormalActivity = {
        "people walking along the sidewalk",     "a man walking with a backpack",
        "two women strolling past the benches",  "pedestrians crossing the plaza slowly",
        "a student standing near the lamp post", "several people walking between the trees"};
    static constexpr std::array<const char*, 4> kSecondary = {
        "someone running across the lawn", "a skateboarder rolling through the walkway",
        "a small cart driving on the pedestrian path", "a truck parked on the footpath"};
    static constexpr std::array<const char*, 5> kContext = {
        "on a sunny afternoon", "near the university building", "with trees in the background",
        "under overcast skies", "beside a row of parked scooters"};

    Rng rng(opt.seed, 77);
    SyntheticRun run;
    run.dir = dir;
    run.manifest = dir / "manifest.tsv";
    run.stub = dir / "stub.tsv";
    run.config = dir / "run.ini";

    std::string manifest = "# frame_id\tvideo_id\tpath\tlabel\n";
    std::string stub;
    const std::size_t per_video = (opt.n_frames + opt.n_videos - 1) / opt.n_videos;
    for (std::size_t i = 0; i < opt.n_frames; ++i) {
        bool anomalous = rng.uniform() < opt.anomalous_fraction;
        if (anomalous && opt.max_anomalous > 0 && run.n_anomalous >= opt.max_anomalous) anomalous = false;
        run.n_anomalous += anomalous;
        const std::string id = "f" + std::to_string(i);
        const std::string video = "v" + std::to_string(i / per_video);
        const std::string image = "frames/" + id + ".png";
        write_fake_png(dir / image, id);
        manifest += id + "\t" + video + "\t" + image + "\t" + (anomalous ? "1" : "0") + "\n";

        std::string text;
        if (opt.identical_descriptions) {
            text = "A person walking near the building.";
        } else {
            text = std::string(kNormalActivity[rng.below(kNormalActivity.size())]);
            if (anomalous) {
                if (rng.uniform() < opt.bicycle_rate) text = "a person riding a bicycle through the crowd";
                if (rng.uniform() < opt.secondary_rate) text += " and " + std::string(kSecondary[rng.below(kSecondary.size())]);
            }
            text += " " + std::string(kContext[rng.below(kContext.size())]) + ".";
            text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
        }
        stub += id + "\t" + text + "\n";
    }
    write_text(run.manifest, manifest);
    write_text(run.stub, stub);
    write_text(run.config, "[dataset]\n"
                           "manifest = manifest.tsv\n"
                           "name = synthetic\n"
                           "profile = generic\n"
                           "\n[provider]\n"
                           "model = stub-vlm\n"
                           "stub = stub.tsv\n"
                           "max_concurrency = " + std::to_string(opt.max_concurrency) + "\n"
                           "\n[run]\n"
                           "seed = 7\n"
                           "output_dir = out\n" +
                               opt.extra_config);
    return run;
}

} // namespace vadsk::testing
