#include "fixture.hpp"

#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "memvqa/adapters.hpp"

namespace fs = std::filesystem;

namespace memvqa::fixture {
namespace {

constexpr std::array kInstruments = {"bipolar forceps",  "prograsp forceps",  "large needle driver",
                                     "monopolar curved scissors", "ultrasound probe", "suction",
                                     "clip applier", "stapler"};
constexpr std::array kActions = {"Idle",    "Grasping", "Retraction", "Tissue_Manipulation", "Tool_Manipulation",
                                 "Cutting", "Cauterization", "Suction", "Looping", "Suturing",
                                 "Clipping", "Staple", "Ultrasound_Sensing"};
constexpr std::array kLocations = {"left-top", "right-top", "left-bottom", "right-bottom"};
constexpr std::array kTools = {"grasper", "bipolar", "hook", "scissors", "clipper", "irrigator", "specimen bag"};
constexpr std::array kPhases = {"preparation",         "calot triangle dissection", "clipping cutting",
                                "gallbladder dissection", "gallbladder packaging", "cleaning coagulation",
                                "gallbladder retraction"};

// Skewed pick: earlier items are more likely, so frequency rankings are non-trivial.
template <typename Array>
std::string skewed(std::mt19937_64& rng, const Array& items) {
    const std::size_t n = items.size();
    const std::size_t a = rng() % n;
    const std::size_t b = rng() % n;
    return items[std::min(a, b)];
}

std::string pad3(std::size_t v) {
    std::ostringstream s;
    s << (v < 100 ? "0" : "") << (v < 10 ? "0" : "") << v;
    return s.str();
}

void add_endovis_frame(SampleSet& set, const FixtureOptions& o, const std::string& video, const std::string& frame,
                       std::mt19937_64& rng) {
    auto add = [&](std::string q, std::string a) {
        set.add({o.dataset, video, frame, video + "/left_frames/" + frame + ".png", std::move(q), std::move(a)});
    };
    add("What organ is being operated?", "kidney");
    std::vector<std::string> pool(kInstruments.begin(), kInstruments.end());
    const std::size_t tools = 2 + rng() % 3;
    for (std::size_t i = 0; i < tools; ++i) {
        const std::size_t pick = rng() % std::min<std::size_t>(pool.size(), 5);
        const auto tool = pool[pick];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        add("What is the state of " + tool + "?", skewed(rng, kActions));
        add("Where is " + tool + " located?", skewed(rng, kLocations));
    }
}

void add_cholec_frame(SampleSet& set, const FixtureOptions& o, const std::string& video, const std::string& frame,
                      std::mt19937_64& rng) {
    auto add = [&](std::string q, std::string a) {
        set.add({o.dataset, video, frame, "cropped_image/" + video + "/" + frame + ".png", std::move(q),
                 std::move(a)});
    };
    const auto phase = skewed(rng, kPhases);
    add("What is the phase of the image?", phase);
    add("How many tools are operating?", std::to_string(rng() % 4));
    const auto tool = kTools[rng() % kTools.size()];
    add("Is " + std::string(tool) + " used in " + phase + "?", (rng() % 3 == 0) ? "no" : "yes");
    add("Is this a laparoscopic image?", "yes");
}

}  // namespace

SampleSet make_fixture(const FixtureOptions& o, Split split) {
    SampleSet set(split);
    std::mt19937_64 rng(o.seed * 1000003 + (split == Split::Train ? 0 : 1));
    const std::size_t video_base = split == Split::Train ? 1 : 100;
    for (std::size_t v = 0; v < o.videos; ++v) {
        const std::string video =
            o.dataset == DatasetId::Cholec80 ? "VID" + pad3(video_base + v) : "seq_" + std::to_string(video_base + v);
        for (std::size_t f = 0; f < o.frames_per_video; ++f) {
            const std::string frame = "frame" + pad3(f);
            if (o.dataset == DatasetId::Cholec80) {
                add_cholec_frame(set, o, video, frame, rng);
            } else {
                add_endovis_frame(set, o, video, frame, rng);
            }
        }
    }
    return set;
}

OracleBundle make_oracle(const FixtureOptions& options, std::size_t n, std::size_t k) {
    OracleBundle b;
    b.train = make_fixture(options, Split::Train);
    b.test = make_fixture(options, Split::Test);
    b.table = build_frequency_table(b.train);
    b.store = annotate_indirect_memory(b.test, b.table, n, k);
    b.dm = annotate_direct_memories(b.test, b.table, k);
    b.script = mock_from_annotations(b.test, b.store, b.dm);
    return b;
}

void write_native_layout(const SampleSet& set, const fs::path& root) {
    auto subst = [](std::string pattern, const FrameKey& key) {
        for (const auto& [name, value] : {std::pair{std::string("{video}"), key.video},
                                          std::pair{std::string("{frame}"), key.frame}}) {
            for (auto pos = pattern.find(name); pos != std::string::npos; pos = pattern.find(name)) {
                pattern.replace(pos, name.size(), value);
            }
        }
        return pattern;
    };
    for (const auto& key : set.frames()) {
        const auto layout = DatasetLayout::defaults_for(set[set.frame_samples(key).front()].dataset);
        const auto qa_dir = root / subst(layout.qa_dir, key);
        fs::create_directories(qa_dir);
        std::ofstream qa(qa_dir / (key.frame + layout.qa_suffix), std::ios::binary);
        for (auto idx : set.frame_samples(key)) qa << set[idx].question << '|' << set[idx].answer << '\n';
        const auto image = root / subst(layout.image, key);
        fs::create_directories(image.parent_path());
        std::ofstream img(image, std::ios::binary);
        img << "\x89PNG fixture " << to_string(key);
    }
}

fs::path scratch_dir(const std::string& name) {
    // ctest runs test cases as separate processes in parallel
    static const auto suffix = std::to_string(std::random_device{}());
    const auto dir = fs::temp_directory_path() / ("memvqa_test_" + name + "_" + suffix);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace memvqa::fixture
