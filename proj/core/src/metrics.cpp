#include "memvqa/metrics.hpp"

#include <iomanip>
#include <ostream>

#include "memvqa/error.hpp"
#include "memvqa/prompting.hpp"

namespace memvqa {

std::optional<std::size_t> normalize_answer(std::string_view text, const LabelVocab& vocab) {
    return vocab.find(strip_end_marker(text));
}

ConfusionMatrix::ConfusionMatrix(std::size_t n_labels) : n_labels_(n_labels), counts_(n_labels * (n_labels + 1), 0) {}

void ConfusionMatrix::add(std::size_t gold, std::optional<std::size_t> predicted) {
    const std::size_t column = predicted ? *predicted : n_labels_;
    ++counts_[gold * (n_labels_ + 1) + column];
    ++total_;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < n_labels_; ++i) t += at(i, i);
    return t;
}

std::size_t ConfusionMatrix::support(std::size_t label) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j <= n_labels_; ++j) s += at(label, j);
    return s;
}

std::size_t ConfusionMatrix::predicted_count(std::size_t label) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_labels_; ++i) s += at(i, label);
    return s;
}

MetricTuple score_matrix(const ConfusionMatrix& matrix, std::vector<ClassScores>* per_class) {
    MetricTuple m;
    m.count = matrix.total();
    if (m.count == 0) return m;
    m.accuracy = static_cast<double>(matrix.trace()) / static_cast<double>(m.count);

    std::size_t present = 0;
    double recall_sum = 0.0;
    double f1_sum = 0.0;
    double weighted_sum = 0.0;
    if (per_class != nullptr) per_class->assign(matrix.n_labels(), {});
    for (std::size_t c = 0; c < matrix.n_labels(); ++c) {
        const auto tp = static_cast<double>(matrix.at(c, c));
        const auto predicted = static_cast<double>(matrix.predicted_count(c));
        const auto support = matrix.support(c);
        ClassScores s;
        s.support = support;
        s.precision = predicted > 0.0 ? tp / predicted : 0.0;
        s.recall = support > 0 ? tp / static_cast<double>(support) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        if (per_class != nullptr) (*per_class)[c] = s;
        if (support == 0) continue;  // classes absent from gold do not enter the averages
        ++present;
        recall_sum += s.recall;
        f1_sum += s.f1;
        weighted_sum += static_cast<double>(support) * s.f1;
    }
    if (present > 0) {
        m.macro_recall = recall_sum / static_cast<double>(present);
        m.macro_f1 = f1_sum / static_cast<double>(present);
        m.weighted_f1 = weighted_sum / static_cast<double>(m.count);
    }
    return m;
}

namespace {

bool hints_contain(const HintSet& hints, const std::string& normalized_label) {
    for (const auto& h : hints.hints()) {
        if (LabelVocab::normalize(h) == normalized_label) return true;
    }
    return false;
}

}  // namespace

ErrorCause classify_error(const Prediction& prediction, const LabelVocab& vocab) {
    const auto gold = vocab.find(prediction.sample.answer);
    const auto predicted = prediction.error ? std::nullopt : normalize_answer(prediction.answer_text, vocab);
    if (gold && predicted && *gold == *predicted) return ErrorCause::None;
    if (prediction.error) return ErrorCause::Other;

    const auto gold_norm = LabelVocab::normalize(prediction.sample.answer);
    if (!prediction.trace.dm.hints.is_null() && !hints_contain(prediction.trace.dm.hints, gold_norm)) {
        return ErrorCause::WrongDirectMemory;
    }
    const auto answer_norm = LabelVocab::normalize(strip_end_marker(prediction.answer_text));
    if (!hints_contain(prediction.trace.dm.hints, answer_norm)) {
        for (const auto& sel : prediction.trace.im_selected) {
            if (hints_contain(sel.entry.hints, answer_norm)) return ErrorCause::WrongIndirectMemory;
        }
    }
    return ErrorCause::Other;
}

ErrorCauses classify_errors(const std::vector<Prediction>& predictions, const LabelVocab& vocab) {
    ErrorCauses causes;
    for (const auto& p : predictions) {
        switch (classify_error(p, vocab)) {
            case ErrorCause::None: break;
            case ErrorCause::WrongDirectMemory: ++causes.wrong_dm; break;
            case ErrorCause::WrongIndirectMemory: ++causes.wrong_im; break;
            case ErrorCause::Other: ++causes.other; break;
        }
    }
    return causes;
}

MetricsReport evaluate(const std::vector<Prediction>& predictions, const LabelVocab& vocab) {
    if (predictions.empty()) throw EvalError("no predictions to evaluate");
    MetricsReport report;
    report.dataset = vocab.dataset();
    ConfusionMatrix overall(vocab.size());
    std::map<QuestionType, ConfusionMatrix> by_type;
    for (const auto& p : predictions) {
        const auto gold = vocab.find(p.sample.answer);
        if (!gold) {
            throw EvalError("gold answer '" + p.sample.answer + "' of prediction " + std::to_string(p.index) +
                            " is not in the vocabulary");
        }
        const auto predicted = p.error ? std::nullopt : normalize_answer(p.answer_text, vocab);
        if (!predicted) ++report.unmatched_count;
        if (p.error) ++report.failed_count;
        if (p.malformed()) ++report.malformed_count;
        overall.add(*gold, predicted);
        const auto type = classify_question(p.sample.question, vocab.dataset());
        by_type.try_emplace(type, vocab.size()).first->second.add(*gold, predicted);
    }
    report.overall = score_matrix(overall, &report.per_class);
    for (const auto& [type, matrix] : by_type) report.per_type[type] = score_matrix(matrix);
    report.error_causes = classify_errors(predictions, vocab);
    return report;
}

namespace {

nlohmann::json tuple_json(const MetricTuple& t) {
    nlohmann::json j;
    j["count"] = t.count;
    j["accuracy"] = t.accuracy;
    j["macro_recall"] = t.macro_recall;
    j["macro_f1"] = t.macro_f1;
    j["weighted_f1"] = t.weighted_f1;
    return j;
}

}  // namespace

nlohmann::json MetricsReport::to_json(const LabelVocab& vocab) const {
    nlohmann::json j;
    j["dataset"] = to_string(dataset);
    j["overall"] = tuple_json(overall);
    j["recall_average"] = "macro";
    auto types = nlohmann::json::object();
    for (const auto& [type, t] : per_type) types[std::string(to_string(type))] = tuple_json(t);
    j["per_type"] = std::move(types);
    auto classes = nlohmann::json::array();
    for (std::size_t i = 0; i < per_class.size() && i < vocab.size(); ++i) {
        nlohmann::json c;
        c["label"] = vocab.labels()[i];
        c["precision"] = per_class[i].precision;
        c["recall"] = per_class[i].recall;
        c["f1"] = per_class[i].f1;
        c["support"] = per_class[i].support;
        classes.push_back(std::move(c));
    }
    j["per_class"] = std::move(classes);
    j["unmatched"] = unmatched_count;
    j["failed"] = failed_count;
    j["malformed"] = malformed_count;
    j["error_causes"] = {
        {"wrong_dm", error_causes.wrong_dm},
        {"wrong_im", error_causes.wrong_im},
        {"other", error_causes.other},
        {"definitions",
         {{"wrong_dm", "gold answer absent from the generated direct-memory hints"},
          {"wrong_im", "gold in hints, but the answer matches a selected indirect-memory hint and no direct-memory hint"},
          {"other", "any remaining wrong prediction, including pipeline failures"}}}};
    return j;
}

void MetricsReport::print_table(std::ostream& out, const LabelVocab&) const {
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(1);
    auto row = [&out](std::string_view name, const MetricTuple& t) {
        out << std::left << std::setw(10) << name << std::right << std::setw(7) << t.count << std::setw(8)
            << 100.0 * t.accuracy << std::setw(8) << 100.0 * t.macro_recall << std::setw(8) << 100.0 * t.macro_f1
            << std::setw(8) << 100.0 * t.weighted_f1 << '\n';
    };
    out << "dataset: " << to_string(dataset) << "  (Rec. = macro recall)\n";
    out << std::left << std::setw(10) << "slice" << std::right << std::setw(7) << "n" << std::setw(8) << "Acc."
        << std::setw(8) << "Rec." << std::setw(8) << "m-F1" << std::setw(8) << "w-F1" << '\n';
    row("overall", overall);
    for (const auto& [type, t] : per_type) row(to_string(type), t);
    out << "unmatched: " << unmatched_count << "  failed: " << failed_count << "  malformed: " << malformed_count << '\n';
    out << "errors: wrong_dm=" << error_causes.wrong_dm << " wrong_im=" << error_causes.wrong_im
        << " other=" << error_causes.other << '\n';
    out.flags(flags);
}

void MetricsReport::write_type_csv(std::ostream& out) const {
    out << "type,count,accuracy,macro_recall,macro_f1,weighted_f1\n";
    auto row = [&out](std::string_view name, const MetricTuple& t) {
        out << name << ',' << t.count << ',' << t.accuracy << ',' << t.macro_recall << ',' << t.macro_f1 << ','
            << t.weighted_f1 << '\n';
    };
    for (const auto& [type, t] : per_type) row(to_string(type), t);
    row("overall", overall);
}

}  // namespace memvqa
