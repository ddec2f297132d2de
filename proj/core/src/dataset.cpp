#include "memvqa/dataset.hpp"

#include <fstream>
#include <ostream>
#include <set>

#include "jsonl.hpp"
#include "memvqa/annotation.hpp"
#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

std::string_view to_string(DatasetId id) {
    switch (id) {
        case DatasetId::EndoVis18: return "endovis18";
        case DatasetId::EndoVis17: return "endovis17";
        case DatasetId::Cholec80: return "cholec80";
    }
    return "unknown";
}

std::string_view to_string(Split split) {
    return split == Split::Train ? "train" : "test";
}

DatasetId parse_dataset_id(std::string_view name) {
    std::string key;
    for (char c : text::to_lower_ascii(name)) {
        if (c != '-' && c != '_' && c != ' ') key.push_back(c);
    }
    if (key == "endovis18" || key == "endovis18vqa") return DatasetId::EndoVis18;
    if (key == "endovis17" || key == "endovis17vqla" || key == "endovis17vqal") return DatasetId::EndoVis17;
    if (key == "cholec80" || key == "cholec80vqa") return DatasetId::Cholec80;
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
    const auto key = text::to_lower_ascii(text::trim(name));
    if (key == "train") return Split::Train;
    if (key == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(name) + "'");
}

std::string to_string(const FrameKey& key) {
    return key.video + "/" + key.frame;
}

// --- SampleSet -------------------------------------------------------------

void SampleSet::add(Sample sample) {
    auto key = sample.frame_key();
    auto [it, inserted] = frame_index_.try_emplace(key);
    if (!inserted) {
        for (std::size_t idx : it->second) {
            const Sample& other = samples_[idx];
            if (other.dataset == sample.dataset &&
                normalize_question(other.question) == normalize_question(sample.question)) {
                throw RecordError(to_string(key), it->second.size() + 1,
                                  "duplicate question '" + sample.question + "' in frame");
            }
        }
    } else {
        frame_order_.push_back(key);
    }
    it->second.push_back(samples_.size());
    samples_.push_back(std::move(sample));
}

const std::vector<std::size_t>& SampleSet::frame_samples(const FrameKey& key) const {
    static const std::vector<std::size_t> kEmpty;
    const auto it = frame_index_.find(key);
    return it == frame_index_.end() ? kEmpty : it->second;
}

void SampleSet::append(const SampleSet& other) {
    for (const auto& s : other.samples_) add(s);
}

// --- LabelVocab ------------------------------------------------------------

namespace {

std::vector<std::string> endovis_labels() {
    return {"kidney",   "Idle",     "Grasping", "Retraction",   "Tissue_Manipulation", "Tool_Manipulation",
            "Cutting",  "Cauterization", "Suction", "Looping",  "Suturing",            "Clipping",
            "Staple",   "Ultrasound_Sensing", "left-top", "right-top", "left-bottom", "right-bottom"};
}

std::vector<std::string> cholec_labels() {
    return {"no",
            "yes",
            "0",
            "1",
            "2",
            "3",
            "calot triangle dissection",
            "gallbladder dissection",
            "clipping cutting",
            "gallbladder retraction",
            "cleaning coagulation",
            "gallbladder packaging",
            "preparation"};
}

}  // namespace

const LabelVocab& LabelVocab::for_dataset(DatasetId id) {
    static const LabelVocab endovis18(DatasetId::EndoVis18, endovis_labels());
    static const LabelVocab endovis17(DatasetId::EndoVis17, endovis_labels());
    static const LabelVocab cholec80(DatasetId::Cholec80, cholec_labels());
    switch (id) {
        case DatasetId::EndoVis18: return endovis18;
        case DatasetId::EndoVis17: return endovis17;
        case DatasetId::Cholec80: return cholec80;
    }
    return endovis18;
}

LabelVocab::LabelVocab(DatasetId id, std::vector<std::string> labels) : dataset_(id), labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!normalized_.emplace(normalize(labels_[i]), i).second) {
            throw ConfigError("label vocabulary has duplicate entry after normalization: " + labels_[i]);
        }
    }
}

std::string LabelVocab::normalize(std::string_view text) {
    std::string s = text::to_lower_ascii(text);
    for (char& c : s) {
        if (c == '_') c = ' ';
    }
    return text::collapse_whitespace(s);
}

std::optional<std::size_t> LabelVocab::find(std::string_view text) const {
    const auto it = normalized_.find(normalize(text));
    if (it == normalized_.end()) return std::nullopt;
    return it->second;
}

// --- question types ----------------------------------------------------------

std::string_view to_string(QuestionType type) {
    switch (type) {
        case QuestionType::Action: return "Action";
        case QuestionType::Location: return "Location";
        case QuestionType::Binary: return "Binary";
        case QuestionType::Count: return "Count";
        case QuestionType::Unknown: return "Unknown";
    }
    return "Unknown";
}

const std::vector<QuestionTypeRule>& question_type_rules(DatasetId id) {
    static const std::vector<QuestionTypeRule> endovis = {
        {"Where is", QuestionType::Location},
        {"What is the state", QuestionType::Action},
    };
    // Phase questions are reported under Action.
    static const std::vector<QuestionTypeRule> cholec = {
        {"How many", QuestionType::Count},
        {"What is the phase", QuestionType::Action},
        {"Is ", QuestionType::Binary},
        {"Are ", QuestionType::Binary},
        {"Was ", QuestionType::Binary},
        {"Does ", QuestionType::Binary},
    };
    return id == DatasetId::Cholec80 ? cholec : endovis;
}

QuestionType classify_question(std::string_view question, DatasetId id) {
    const auto q = text::collapse_whitespace(question);
    if (q.empty()) return QuestionType::Unknown;
    for (const auto& rule : question_type_rules(id)) {
        if (text::starts_with_icase(q, rule.prefix)) return rule.type;
    }
    return QuestionType::Unknown;
}

// --- statistics ----------------------------------------------------------------

DatasetStats compute_stats(const SampleSet& set, const IndirectMemoryStore* memory) {
    DatasetStats stats;
    std::set<std::string> videos;
    std::set<std::size_t> labels;
    std::map<std::string, std::set<std::string>> answers_by_question;
    for (const auto& s : set.samples()) {
        videos.insert(s.video);
        const auto& vocab = LabelVocab::for_dataset(s.dataset);
        if (auto idx = vocab.find(s.answer)) labels.insert(*idx);
        answers_by_question[normalize_question(s.question)].insert(LabelVocab::normalize(s.answer));
        ++stats.per_type[classify_question(s.question, s.dataset)];
    }
    stats.n_videos = videos.size();
    stats.n_frames = set.frames().size();
    stats.n_qa = set.size();
    stats.n_questions = answers_by_question.size();
    stats.n_labels = labels.size();
    if (stats.n_frames > 0) {
        stats.qa_per_frame = static_cast<double>(stats.n_qa) / static_cast<double>(stats.n_frames);
    }
    if (!answers_by_question.empty()) {
        std::size_t total = 0;
        for (const auto& [q, answers] : answers_by_question) total += answers.size();
        stats.answers_per_question = static_cast<double>(total) / static_cast<double>(answers_by_question.size());
    }
    if (memory != nullptr) {
        std::size_t entries = 0;
        for (const auto& frame : set.frames()) {
            if (const auto* list = memory->find(frame)) entries += list->size();
        }
        stats.mem_per_frame =
            stats.n_frames > 0 ? static_cast<double>(entries) / static_cast<double>(stats.n_frames) : 0.0;
    }
    return stats;
}

// --- normalized JSONL ----------------------------------------------------------

void write_samples_jsonl(const SampleSet& set, std::ostream& out) {
    for (const auto& s : set.samples()) {
        nlohmann::ordered_json j;
        j["dataset"] = to_string(s.dataset);
        j["split"] = to_string(set.split());
        j["video"] = s.video;
        j["frame"] = s.frame;
        j["image"] = s.image;
        j["question"] = s.question;
        j["answer"] = s.answer;
        out << j.dump() << '\n';
    }
}

void write_samples_jsonl(const SampleSet& set, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    write_samples_jsonl(set, out);
}

SampleSet read_samples_jsonl(std::istream& in, const std::string& source_name) {
    std::optional<SampleSet> set;
    detail::for_each_jsonl(in, source_name, [&](const nlohmann::json& j, std::size_t line) {
        Sample s;
        s.dataset = parse_dataset_id(j.at("dataset").get<std::string>());
        const Split split = parse_split(j.at("split").get<std::string>());
        s.video = j.at("video").get<std::string>();
        s.frame = j.at("frame").get<std::string>();
        s.image = j.at("image").get<std::string>();
        s.question = j.at("question").get<std::string>();
        s.answer = j.at("answer").get<std::string>();
        if (text::trim(s.question).empty()) throw RecordError(source_name, line, "empty question");
        if (text::trim(s.answer).empty()) throw RecordError(source_name, line, "empty answer");
        if (!set) set.emplace(split);
        if (set->split() != split) throw RecordError(source_name, line, "mixed splits in one file");
        if (!LabelVocab::for_dataset(s.dataset).find(s.answer)) {
            throw LabelError(source_name + ":" + std::to_string(line) + ": answer '" + s.answer +
                             "' is not a " + std::string(to_string(s.dataset)) + " label");
        }
        try {
            set->add(std::move(s));
        } catch (const RecordError& e) {
            throw RecordError(source_name, line, e.what());
        }
    });
    return set ? std::move(*set) : SampleSet{};
}

SampleSet read_samples_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_samples_jsonl(in, path.string());
}

}  // namespace memvqa
