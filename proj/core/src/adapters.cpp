#include "memvqa/adapters.hpp"

#include <algorithm>
#include <fstream>

#include "memvqa/config.hpp"
#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

namespace fs = std::filesystem;

DatasetLayout DatasetLayout::defaults_for(DatasetId id) {
    switch (id) {
        case DatasetId::EndoVis18:
            return {"{video}/vqa/Classification", "_QA.txt", "{video}/left_frames/{frame}.png"};
        case DatasetId::EndoVis17:
            return {"{video}/vqla/label", ".txt", "{video}/left_frames/{frame}.png"};
        case DatasetId::Cholec80:
            return {"vqa/Classification/{video}", "_QA.txt", "cropped_image/{video}/{frame}.png"};
    }
    return {};
}

namespace {

std::string substitute(std::string pattern, const std::string& video, const std::string& frame = {}) {
    auto replace_all = [&pattern](std::string_view token, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = pattern.find(token, pos)) != std::string::npos) {
            pattern.replace(pos, token.size(), value);
            pos += value.size();
        }
    };
    replace_all("{video}", video);
    replace_all("{frame}", frame);
    return pattern;
}

std::vector<std::string> list_videos(const fs::path& root, const DatasetLayout& layout) {
    const auto pos = layout.qa_dir.find("{video}");
    if (pos == std::string::npos) throw ConfigError("qa_dir pattern must contain {video}: " + layout.qa_dir);
    const fs::path parent = root / layout.qa_dir.substr(0, pos);
    if (!fs::is_directory(parent)) throw FileLayoutError("missing annotation directory " + parent.string());
    std::vector<std::string> videos;
    for (const auto& entry : fs::directory_iterator(parent)) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        if (fs::is_directory(root / substitute(layout.qa_dir, name))) videos.push_back(name);
    }
    std::sort(videos.begin(), videos.end(), [](const auto& a, const auto& b) { return text::natural_less(a, b); });
    return videos;
}

std::vector<std::string> parse_video_list(const std::string& value) {
    std::vector<std::string> videos;
    std::string current;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!current.empty()) videos.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) videos.push_back(std::move(current));
    return videos;
}

}  // namespace

DatasetSource DatasetSource::from_config(const KeyValues& config, DatasetId id) {
    const std::string prefix = std::string(to_string(id)) + ".";
    DatasetSource source;
    source.dataset = id;
    const auto root = config.get(prefix + "root");
    if (!root) throw ConfigError("missing " + prefix + "root");
    source.root = *root;
    source.layout = DatasetLayout::defaults_for(id);
    if (auto v = config.get(prefix + "qa_dir")) source.layout.qa_dir = *v;
    if (auto v = config.get(prefix + "qa_suffix")) source.layout.qa_suffix = *v;
    if (auto v = config.get(prefix + "image")) source.layout.image = *v;
    if (auto v = config.get(prefix + "train")) source.split_videos[Split::Train] = parse_video_list(*v);
    if (auto v = config.get(prefix + "test")) source.split_videos[Split::Test] = parse_video_list(*v);
    return source;
}

SampleSet load_dataset(const DatasetSource& source, Split split) {
    if (!fs::is_directory(source.root)) throw FileLayoutError("dataset root not found: " + source.root.string());

    std::vector<std::string> videos;
    if (auto it = source.split_videos.find(split); it != source.split_videos.end() && !it->second.empty()) {
        videos = it->second;
    } else {
        videos = list_videos(source.root, source.layout);
    }
    if (videos.empty()) throw FileLayoutError("no videos under " + source.root.string());

    const auto& vocab = LabelVocab::for_dataset(source.dataset);
    SampleSet set(split);
    for (const auto& video : videos) {
        const fs::path qa_dir = source.root / substitute(source.layout.qa_dir, video);
        if (!fs::is_directory(qa_dir)) throw FileLayoutError("missing annotation directory " + qa_dir.string());

        std::vector<std::pair<std::string, fs::path>> frames;
        for (const auto& entry : fs::directory_iterator(qa_dir)) {
            if (!entry.is_regular_file()) continue;
            const auto name = entry.path().filename().string();
            const auto& suffix = source.layout.qa_suffix;
            if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
                continue;
            }
            frames.emplace_back(name.substr(0, name.size() - suffix.size()), entry.path());
        }
        if (frames.empty()) throw FileLayoutError("empty annotation directory " + qa_dir.string());
        std::sort(frames.begin(), frames.end(),
                  [](const auto& a, const auto& b) { return text::natural_less(a.first, b.first); });

        for (const auto& [frame, path] : frames) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw FileLayoutError("cannot open " + path.string());
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (text::trim(line).empty()) continue;
                const auto fields = text::split(line, '|');
                if (fields.size() < 2) throw RecordError(path.string(), line_no, "expected 'question|answer'");
                Sample s;
                s.dataset = source.dataset;
                s.video = video;
                s.frame = frame;
                s.image = substitute(source.layout.image, video, frame);
                s.question = text::trim(fields[0]);
                s.answer = text::trim(fields[1]);
                if (s.question.empty() || s.answer.empty()) {
                    throw RecordError(path.string(), line_no, "empty question or answer");
                }
                if (!vocab.find(s.answer)) {
                    throw LabelError(path.string() + ":" + std::to_string(line_no) + ": answer '" + s.answer +
                                     "' is not a " + std::string(to_string(source.dataset)) + " label");
                }
                try {
                    set.add(std::move(s));
                } catch (const RecordError& e) {
                    throw RecordError(path.string(), line_no, e.what());
                }
            }
        }
    }
    return set;
}

}  // namespace memvqa
