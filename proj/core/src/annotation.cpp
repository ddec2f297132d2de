#include "memvqa/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "jsonl.hpp"
#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

std::string normalize_question(std::string_view question) {
    return text::collapse_whitespace(question);
}

// --- HintSet / MemoryEntry ----------------------------------------------------

HintSet::HintSet(std::vector<std::string> hints) {
    for (auto& h : hints) push_back(std::move(h));
}

HintSet HintSet::null_sentinel() {
    HintSet h;
    h.null_ = true;
    return h;
}

bool HintSet::contains(std::string_view label) const {
    return std::find(hints_.begin(), hints_.end(), label) != hints_.end();
}

bool HintSet::push_back(std::string label) {
    if (contains(label)) return false;
    hints_.push_back(std::move(label));
    return true;
}

std::string HintSet::serialize() const {
    if (null_) return "[NULL]";
    return "[" + text::join(hints_, ", ") + "]";
}

std::string MemoryEntry::serialize() const {
    return question + " " + hints.serialize();
}

// --- AnswerFrequencyTable -----------------------------------------------------

void AnswerFrequencyTable::add(std::string_view question, std::string_view answer) {
    const auto q = normalize_question(question);
    ++counts_[q][text::trim(answer)];
    ++totals_[q];
}

bool AnswerFrequencyTable::contains(std::string_view question) const {
    return counts_.count(normalize_question(question)) > 0;
}

std::size_t AnswerFrequencyTable::question_frequency(std::string_view question) const {
    const auto it = totals_.find(normalize_question(question));
    return it == totals_.end() ? 0 : it->second;
}

std::size_t AnswerFrequencyTable::distinct_answers(std::string_view question) const {
    const auto it = counts_.find(normalize_question(question));
    return it == counts_.end() ? 0 : it->second.size();
}

std::vector<std::pair<std::string, std::size_t>> AnswerFrequencyTable::ranked_answers(std::string_view question) const {
    std::vector<std::pair<std::string, std::size_t>> ranked;
    const auto it = counts_.find(normalize_question(question));
    if (it == counts_.end()) return ranked;
    ranked.assign(it->second.begin(), it->second.end());
    // map iteration is already label-ascending, so a stable sort on count keeps the tie-break
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

AnswerFrequencyTable build_frequency_table(const SampleSet& train) {
    AnswerFrequencyTable table;
    for (const auto& s : train.samples()) table.add(s.question, s.answer);
    return table;
}

HintSet annotate_direct_memory(std::string_view question, const std::optional<std::string>& gold,
                               const AnswerFrequencyTable& table, std::size_t k) {
    if (k == 0) throw AnnotationError("K must be >= 1");
    if (!table.contains(question) && !gold) {
        throw AnnotationError("question '" + std::string(question) + "' is not in the frequency table and has no gold answer");
    }
    const auto ranked = table.ranked_answers(question);
    HintSet hints;
    std::size_t next = 0;
    if (!gold) {
        for (; next < ranked.size() && hints.size() < k; ++next) hints.push_back(ranked[next].first);
        return hints;
    }
    const auto gold_label = text::trim(*gold);
    for (; next < ranked.size() && hints.size() < k - 1; ++next) hints.push_back(ranked[next].first);
    if (!hints.push_back(gold_label)) {
        // gold was already a top candidate: backfill with the next distinct one
        for (; next < ranked.size() && hints.size() < k; ++next) hints.push_back(ranked[next].first);
    }
    return hints;
}

ExclusionFlags annotation_exclusions(const Sample& sample, const AnswerFrequencyTable& table) {
    ExclusionFlags flags;
    if (sample.dataset != DatasetId::Cholec80) return flags;
    flags.skip_direct_memory = classify_question(sample.question, sample.dataset) == QuestionType::Binary;
    flags.skip_memory_vqa = table.distinct_answers(sample.question) == 1;
    return flags;
}

std::vector<ExclusionFlags> apply_annotation_exclusions(const SampleSet& samples, const AnswerFrequencyTable& table) {
    std::vector<ExclusionFlags> flags;
    flags.reserve(samples.size());
    for (const auto& s : samples.samples()) flags.push_back(annotation_exclusions(s, table));
    return flags;
}

// --- IndirectMemoryStore ------------------------------------------------------

void IndirectMemoryStore::set(const FrameKey& frame, std::vector<IndirectMemoryEntry> entries) {
    frames_[frame] = std::move(entries);
}

const std::vector<IndirectMemoryEntry>* IndirectMemoryStore::find(const FrameKey& frame) const {
    const auto it = frames_.find(frame);
    return it == frames_.end() ? nullptr : &it->second;
}

std::size_t IndirectMemoryStore::total_entries() const {
    std::size_t n = 0;
    for (const auto& [frame, entries] : frames_) n += entries.size();
    return n;
}

std::string IndirectMemoryStore::serialize_entries(const std::vector<IndirectMemoryEntry>& entries) {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out.push_back('\n');
        out += entries[i].serialize();
    }
    return out;
}

namespace {

nlohmann::ordered_json hints_to_json(const HintSet& hints) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& h : hints.hints()) arr.push_back(h);
    return arr;
}

HintSet hints_from_json(const nlohmann::json& j, bool is_null) {
    if (is_null) return HintSet::null_sentinel();
    return HintSet(j.get<std::vector<std::string>>());
}

}  // namespace

void IndirectMemoryStore::write_jsonl(std::ostream& out) const {
    for (const auto& [frame, entries] : frames_) {
        nlohmann::ordered_json j;
        j["video"] = frame.video;
        j["frame"] = frame.frame;
        auto im = nlohmann::ordered_json::array();
        for (const auto& e : entries) {
            nlohmann::ordered_json entry;
            entry["q"] = e.question;
            entry["hints"] = hints_to_json(e.hints);
            im.push_back(std::move(entry));
        }
        j["im"] = std::move(im);
        out << j.dump() << '\n';
    }
}

IndirectMemoryStore IndirectMemoryStore::read_jsonl(std::istream& in, const std::string& source_name) {
    IndirectMemoryStore store;
    detail::for_each_jsonl(in, source_name, [&](const nlohmann::json& j, std::size_t) {
        std::vector<IndirectMemoryEntry> entries;
        for (const auto& e : j.at("im")) {
            entries.push_back({e.at("q").get<std::string>(), hints_from_json(e.at("hints"), false)});
        }
        store.set({j.at("video").get<std::string>(), j.at("frame").get<std::string>()}, std::move(entries));
    });
    return store;
}

IndirectMemoryStore IndirectMemoryStore::read_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_jsonl(in, path.string());
}

IndirectMemoryStore annotate_indirect_memory(const SampleSet& samples, const AnswerFrequencyTable& table,
                                             std::size_t n, std::size_t k) {
    IndirectMemoryStore store;
    for (const auto& frame : samples.frames()) {
        struct Candidate {
            std::size_t frequency;
            IndirectMemoryEntry entry;
        };
        std::vector<Candidate> candidates;
        for (std::size_t idx : samples.frame_samples(frame)) {
            const Sample& s = samples[idx];
            const std::size_t freq = table.question_frequency(s.question);
            if (freq < n) continue;
            HintSet hints = annotation_exclusions(s, table).skip_direct_memory
                                ? HintSet({text::trim(s.answer)})
                                : annotate_direct_memory(s.question, s.answer, table, k);
            candidates.push_back({freq, {normalize_question(s.question), std::move(hints)}});
        }
        std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.frequency != b.frequency) return a.frequency > b.frequency;
            return a.entry.question < b.entry.question;
        });
        std::vector<IndirectMemoryEntry> entries;
        entries.reserve(candidates.size());
        for (auto& c : candidates) entries.push_back(std::move(c.entry));
        store.set(frame, std::move(entries));
    }
    return store;
}

// --- DirectMemoryAnnotations --------------------------------------------------

void DirectMemoryAnnotations::set(const FrameKey& frame, std::string_view question, HintSet hints) {
    entries_[{frame, normalize_question(question)}] = std::move(hints);
}

const HintSet* DirectMemoryAnnotations::find(const FrameKey& frame, std::string_view question) const {
    const auto it = entries_.find({frame, normalize_question(question)});
    return it == entries_.end() ? nullptr : &it->second;
}

void DirectMemoryAnnotations::write_jsonl(std::ostream& out) const {
    for (const auto& [key, hints] : entries_) {
        nlohmann::ordered_json j;
        j["video"] = key.first.video;
        j["frame"] = key.first.frame;
        j["question"] = key.second;
        j["hints"] = hints_to_json(hints);
        j["null"] = hints.is_null();
        out << j.dump() << '\n';
    }
}

DirectMemoryAnnotations DirectMemoryAnnotations::read_jsonl(std::istream& in, const std::string& source_name) {
    DirectMemoryAnnotations dm;
    detail::for_each_jsonl(in, source_name, [&](const nlohmann::json& j, std::size_t) {
        dm.set({j.at("video").get<std::string>(), j.at("frame").get<std::string>()}, j.at("question").get<std::string>(),
               hints_from_json(j.at("hints"), j.value("null", false)));
    });
    return dm;
}

DirectMemoryAnnotations DirectMemoryAnnotations::read_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_jsonl(in, path.string());
}

DirectMemoryAnnotations annotate_direct_memories(const SampleSet& samples, const AnswerFrequencyTable& table,
                                                 std::size_t k) {
    DirectMemoryAnnotations dm;
    for (const auto& s : samples.samples()) {
        if (annotation_exclusions(s, table).skip_direct_memory) {
            dm.set(s.frame_key(), s.question, HintSet::null_sentinel());
        } else {
            dm.set(s.frame_key(), s.question, annotate_direct_memory(s.question, s.answer, table, k));
        }
    }
    return dm;
}

}  // namespace memvqa
