#include "steer/text.hpp"

#include "steer/embedded.hpp"
#include "steer/error.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace steer {

using detail::json;

namespace {

bool is_break_char(char c)
{
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

std::string join(std::span<const std::string> words)
{
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) {
            out += ' ';
        }
        out += w;
    }
    return out;
}

bool matches_at(std::span<const std::string> tokens, std::size_t pos, const std::vector<std::string>& phrase)
{
    if (pos + phrase.size() > tokens.size()) {
        return false;
    }
    return std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos));
}

std::vector<std::string> phrase_tokens(const json& value, const std::string& where)
{
    auto tokens = tokenize(detail::require_string(value, where));
    if (tokens.empty()) {
        throw ValidationError(where + ": phrase is empty");
    }
    return tokens;
}

/// One way to say a feature value: entry, optional modifier, optional negation.
struct Rendering {
    const LexiconEntry* entry = nullptr;
    const ModifierRule* modifier = nullptr;
    bool negated = false;
    double value = 0.0;

    std::string text(const DescriptionTemplates& t) const
    {
        std::string out;
        if (negated) {
            out = t.negation + " ";
        }
        if (modifier) {
            out += join(modifier->phrase) + " ";
        }
        return out + join(entry->phrase);
    }
};

std::vector<Rendering> renderings_for(std::size_t feature, const Lexicon& lexicon, const FeatureRegistry& reg)
{
    const auto& t = lexicon.templates();
    const ValueRange& range = reg[feature].range;
    std::vector<Rendering> out;
    for (const auto& e : lexicon.entries()) {
        if (e.feature_index != feature) {
            continue;
        }
        out.push_back({&e, nullptr, false, phrase_value(e.base_value, {}, false, range)});
        if (e.slot != PhraseSlot::Subject) {
            for (const ModifierRule* m : {lexicon.find_modifier(t.diminisher),
                                          lexicon.find_modifier(e.intensifier.empty() ? t.intensifier : e.intensifier)}) {
                if (m) {
                    const double mult[] = {m->multiplier};
                    out.push_back({&e, m, false, phrase_value(e.base_value, mult, false, range)});
                }
            }
        }
        if (e.slot == PhraseSlot::Noun && lexicon.is_negation(t.negation)) {
            out.push_back({&e, nullptr, true, phrase_value(e.base_value, {}, true, range)});
        }
    }
    return out;
}

std::string with_article(const std::string& phrase)
{
    const bool vowel = !phrase.empty() && std::string_view("aeiou").find(phrase.front()) != std::string_view::npos;
    return (vowel ? "an " : "a ") + phrase;
}

json feature_values_json(const FeatureVector& v, const FeatureRegistry& reg)
{
    json values = json::object();
    json mask = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.mask[i]) {
            values[reg[i].id] = v.values[i];
            mask.push_back(reg[i].id);
        }
    }
    return json{{"values", std::move(values)}, {"mask", std::move(mask)}};
}

} // namespace

std::vector<std::string> tokenize(std::string_view text, std::vector<bool>* breaks)
{
    std::vector<std::string> tokens;
    if (breaks) {
        breaks->clear();
    }
    std::string current;
    bool pending_break = false;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            if (breaks) {
                breaks->push_back(pending_break);
            }
            pending_break = false;
            current.clear();
        }
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
            current.push_back(ch);
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
            if (is_break_char(ch)) {
                pending_break = true;
            }
        }
    }
    flush();
    return tokens;
}

double phrase_value(double base, std::span<const double> multipliers, bool negated, const ValueRange& range)
{
    double scale = 1.0;
    for (double m : multipliers) {
        scale *= m;
    }
    double v = base * scale;
    if (negated) {
        v = -v;
    }
    return range.clamp(v);
}

Lexicon::Lexicon(std::vector<LexiconEntry> entries,
                 std::vector<ModifierRule> modifiers,
                 std::vector<std::string> negations,
                 DescriptionTemplates templates,
                 const FeatureRegistry& reg)
    : entries_(std::move(entries)),
      modifiers_(std::move(modifiers)),
      negations_(std::move(negations)),
      templates_(std::move(templates)),
      feature_count_(reg.size())
{
    for (auto& e : entries_) {
        if (e.phrase.empty()) {
            throw ValidationError("lexicon entry with empty phrase");
        }
        e.feature_index = reg.require_index(e.feature_id);
        if (!reg[e.feature_index].range.contains(e.base_value)) {
            throw ValidationError("lexicon phrase \"" + join(e.phrase) + "\": value outside the range of \"" +
                                  e.feature_id + "\"");
        }
        e.polarity = e.base_value < 0.0 ? Polarity::Negative : Polarity::Positive;
        longest_entry_ = std::max(longest_entry_, e.phrase.size());
    }
    for (const auto& m : modifiers_) {
        if (m.phrase.empty()) {
            throw ValidationError("modifier with empty phrase");
        }
        if (!(m.multiplier > 0.0 && m.multiplier <= 3.0)) {
            throw ValidationError("modifier \"" + join(m.phrase) + "\": multiplier must lie in (0, 3]");
        }
        longest_modifier_ = std::max(longest_modifier_, m.phrase.size());
    }
    for (const auto& e : entries_) {
        if (!e.intensifier.empty() && !find_modifier(e.intensifier)) {
            throw ValidationError("lexicon phrase \"" + join(e.phrase) + "\": unknown intensifier \"" + e.intensifier + "\"");
        }
    }
    for (const auto& group : templates_.exclusive) {
        for (const auto& id : group) {
            reg.require_index(id);
        }
    }
}

const LexiconEntry* Lexicon::longest_entry_at(std::span<const std::string> tokens, std::size_t pos) const
{
    const LexiconEntry* best = nullptr;
    for (const auto& e : entries_) {
        if ((!best || e.phrase.size() > best->phrase.size()) && matches_at(tokens, pos, e.phrase)) {
            best = &e;
        }
    }
    return best;
}

const ModifierRule* Lexicon::longest_modifier_ending_at(std::span<const std::string> tokens, std::size_t end) const
{
    const ModifierRule* best = nullptr;
    for (const auto& m : modifiers_) {
        if (m.phrase.size() > end || (best && m.phrase.size() <= best->phrase.size())) {
            continue;
        }
        if (matches_at(tokens, end - m.phrase.size(), m.phrase)) {
            best = &m;
        }
    }
    return best;
}

const ModifierRule* Lexicon::find_modifier(std::string_view phrase) const
{
    const auto tokens = tokenize(phrase);
    for (const auto& m : modifiers_) {
        if (m.phrase == tokens) {
            return &m;
        }
    }
    return nullptr;
}

bool Lexicon::is_negation(std::string_view token) const
{
    return std::find(negations_.begin(), negations_.end(), token) != negations_.end();
}

Lexicon parse_lexicon(std::string_view json_text, const FeatureRegistry& reg)
{
    const json doc = detail::parse_json(json_text, "lexicon");

    std::vector<LexiconEntry> entries;
    const auto& entries_json = detail::require_array(detail::require_field(doc, "entries", "lexicon"), "lexicon.entries");
    for (std::size_t i = 0; i < entries_json.size(); ++i) {
        const std::string where = "entries[" + std::to_string(i) + "]";
        const auto& item = entries_json[i];
        LexiconEntry e;
        e.phrase = phrase_tokens(detail::require_field(item, "phrase", where), where + ".phrase");
        e.feature_id = detail::require_string(detail::require_field(item, "feature", where), where + ".feature");
        e.base_value = detail::require_number(detail::require_field(item, "value", where), where + ".value");
        if (item.contains("slot")) {
            const auto slot = detail::require_string(item["slot"], where + ".slot");
            if (slot == "noun") {
                e.slot = PhraseSlot::Noun;
            } else if (slot == "adjective") {
                e.slot = PhraseSlot::Adjective;
            } else if (slot == "subject") {
                e.slot = PhraseSlot::Subject;
            } else {
                throw FormatError(where + ".slot: expected noun, adjective or subject");
            }
        }
        if (item.contains("intensifier")) {
            e.intensifier = detail::require_string(item["intensifier"], where + ".intensifier");
        }
        entries.push_back(std::move(e));
    }

    std::vector<ModifierRule> modifiers;
    if (doc.contains("modifiers")) {
        const auto& list = detail::require_array(doc["modifiers"], "lexicon.modifiers");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "modifiers[" + std::to_string(i) + "]";
            ModifierRule m;
            m.phrase = phrase_tokens(detail::require_field(list[i], "phrase", where), where + ".phrase");
            m.multiplier = detail::require_number(detail::require_field(list[i], "multiplier", where), where + ".multiplier");
            modifiers.push_back(std::move(m));
        }
    }

    std::vector<std::string> negations;
    if (doc.contains("negations")) {
        const auto& list = detail::require_array(doc["negations"], "lexicon.negations");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "negations[" + std::to_string(i) + "]";
            auto tokens = phrase_tokens(list[i], where);
            if (tokens.size() != 1) {
                throw ValidationError(where + ": negations are single words");
            }
            negations.push_back(std::move(tokens.front()));
        }
    }

    DescriptionTemplates templates;
    if (doc.contains("templates")) {
        const auto& t = doc["templates"];
        auto text_field = [&](const char* key, std::string& out) {
            if (t.contains(key)) {
                out = detail::require_string(t[key], std::string("templates.") + key);
            }
        };
        text_field("subject", templates.subject);
        text_field("connector", templates.connector);
        text_field("intensifier", templates.intensifier);
        text_field("diminisher", templates.diminisher);
        text_field("negation", templates.negation);
        if (t.contains("exclusive")) {
            for (const auto& group : detail::require_array(t["exclusive"], "templates.exclusive")) {
                std::vector<std::string> ids;
                for (const auto& id : detail::require_array(group, "templates.exclusive[]")) {
                    ids.push_back(detail::require_string(id, "templates.exclusive[]"));
                }
                templates.exclusive.push_back(std::move(ids));
            }
        }
        if (t.contains("max_features")) {
            if (!t["max_features"].is_number_unsigned()) {
                throw FormatError("templates.max_features: expected a non-negative integer");
            }
            templates.max_features = t["max_features"].get<std::size_t>();
        }
    }

    return Lexicon(std::move(entries), std::move(modifiers), std::move(negations), std::move(templates), reg);
}

Lexicon load_lexicon(const std::optional<std::filesystem::path>& path, const FeatureRegistry& reg)
{
    if (!path) {
        return parse_lexicon(embedded::lexicon_json, reg);
    }
    try {
        return parse_lexicon(detail::read_text_file(*path), reg);
    } catch (const FormatError& e) {
        throw FormatError(path->string() + ": " + e.what());
    }
}

ParseResult parse(std::string_view text, const Lexicon& lexicon, const FeatureRegistry& reg)
{
    if (lexicon.feature_count() != reg.size()) {
        throw DimensionError("lexicon was built for a different registry");
    }
    ParseResult result;
    result.features = FeatureVector(reg.size());
    std::vector<bool> breaks;
    auto& tokens = result.trace.tokens;
    tokens = tokenize(text, &breaks);
    std::vector<bool> used(tokens.size(), false);

    bool negation_pending = false;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (breaks[i]) {
            negation_pending = false;
        }
        const LexiconEntry* entry = lexicon.longest_entry_at(tokens, i);
        if (!entry) {
            if (lexicon.is_negation(tokens[i])) {
                negation_pending = true;
                used[i] = true;
            }
            ++i;
            continue;
        }

        // Contiguous modifiers directly before the span, not crossing a clause break.
        std::vector<double> multipliers;
        std::size_t j = i;
        while (j > 0 && !breaks[j]) {
            const ModifierRule* m = lexicon.longest_modifier_ending_at(tokens, j);
            if (!m) {
                break;
            }
            const std::size_t start = j - m->phrase.size();
            bool free = true;
            for (std::size_t t = start; t < j; ++t) {
                free = free && !used[t] && (t == start || !breaks[t]);
            }
            if (!free) {
                break;
            }
            multipliers.insert(multipliers.begin(), m->multiplier);
            std::fill(used.begin() + static_cast<std::ptrdiff_t>(start), used.begin() + static_cast<std::ptrdiff_t>(j), true);
            j = start;
        }

        const std::size_t f = entry->feature_index;
        const double value = phrase_value(entry->base_value, multipliers, negation_pending, reg[f].range);
        negation_pending = false;
        result.features.set(f, value);

        const std::size_t end = i + entry->phrase.size();
        std::fill(used.begin() + static_cast<std::ptrdiff_t>(i), used.begin() + static_cast<std::ptrdiff_t>(end), true);
        result.trace.spans.push_back({i, end});
        result.trace.resolved.emplace_back(entry->feature_id, value);
        i = end;
    }

    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (!used[t]) {
            result.trace.unmatched.push_back(tokens[t]);
        }
    }
    return result;
}

std::string generate_description(const FeatureVector& v, const Lexicon& lexicon, const FeatureRegistry& reg, std::uint64_t rng_seed)
{
    if (v.values.size() != reg.size() || v.mask.size() != reg.size()) {
        throw DimensionError("feature vector does not match the registry");
    }
    const auto& t = lexicon.templates();
    std::mt19937_64 gen(rng_seed);

    std::optional<Rendering> subject;
    std::vector<std::string> adjectives;
    std::vector<std::string> nouns;
    for (std::size_t f = 0; f < v.size(); ++f) {
        if (!v.mask[f]) {
            continue;
        }
        std::vector<Rendering> candidates;
        for (const auto& r : renderings_for(f, lexicon, reg)) {
            if (std::abs(r.value - v.values[f]) <= 1e-9 && !(subject && r.entry->slot == PhraseSlot::Subject)) {
                candidates.push_back(r);
            }
        }
        if (candidates.empty()) {
            throw UnrepresentableValueError("feature \"" + reg[f].id + "\": no phrase renders value " +
                                            std::to_string(v.values[f]));
        }
        const Rendering& pick =
            candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(gen)];
        switch (pick.entry->slot) {
        case PhraseSlot::Subject: subject = pick; break;
        case PhraseSlot::Adjective: adjectives.push_back(pick.text(t)); break;
        case PhraseSlot::Noun: nouns.push_back(pick.text(t)); break;
        }
    }
    std::shuffle(adjectives.begin(), adjectives.end(), gen);
    std::shuffle(nouns.begin(), nouns.end(), gen);

    adjectives.push_back(subject ? subject->text(t) : t.subject);
    std::string out = with_article(join(adjectives));
    if (!nouns.empty()) {
        out += " " + t.connector + " ";
        for (std::size_t i = 0; i < nouns.size(); ++i) {
            if (i > 0) {
                out += i + 1 == nouns.size() ? " and " : ", ";
            }
            out += nouns[i];
        }
    }
    return out;
}

std::vector<CorpusItem> build_corpus(std::size_t n, const Lexicon& lexicon, const FeatureRegistry& reg, std::uint64_t rng_seed)
{
    const auto& t = lexicon.templates();
    std::vector<std::vector<double>> values_by_feature(reg.size());
    std::vector<std::size_t> describable;
    for (std::size_t f = 0; f < reg.size(); ++f) {
        for (const auto& r : renderings_for(f, lexicon, reg)) {
            values_by_feature[f].push_back(r.value);
        }
        if (!values_by_feature[f].empty()) {
            describable.push_back(f);
        }
    }
    std::vector<int> group_of(reg.size(), -1);
    for (std::size_t g = 0; g < t.exclusive.size(); ++g) {
        for (const auto& id : t.exclusive[g]) {
            group_of[reg.require_index(id)] = static_cast<int>(g);
        }
    }

    std::mt19937_64 gen(rng_seed);
    std::vector<CorpusItem> corpus;
    corpus.reserve(n);
    const std::size_t most = std::min(t.max_features, describable.size());
    for (std::size_t item = 0; item < n; ++item) {
        const std::size_t count = std::uniform_int_distribution<std::size_t>(0, most)(gen);
        std::vector<std::size_t> order = describable;
        std::shuffle(order.begin(), order.end(), gen);

        FeatureVector v(reg.size());
        std::vector<bool> group_used(t.exclusive.size(), false);
        std::size_t chosen = 0;
        for (std::size_t f : order) {
            if (chosen == count) {
                break;
            }
            if (group_of[f] >= 0) {
                if (group_used[static_cast<std::size_t>(group_of[f])]) {
                    continue;
                }
                group_used[static_cast<std::size_t>(group_of[f])] = true;
            }
            const auto& options = values_by_feature[f];
            v.set(f, options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(gen)]);
            ++chosen;
        }
        std::string text = generate_description(v, lexicon, reg, gen());
        corpus.push_back({std::move(text), std::move(v)});
    }
    return corpus;
}

std::string serialize_corpus(const std::vector<CorpusItem>& corpus, const FeatureRegistry& reg)
{
    std::string out;
    for (const auto& item : corpus) {
        json line = feature_values_json(item.features, reg);
        line["text"] = item.text;
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::vector<CorpusItem> parse_corpus(std::string_view jsonl, const FeatureRegistry& reg)
{
    std::vector<CorpusItem> corpus;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        const auto line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        const std::string where = "corpus line " + std::to_string(line_no);
        const json item = detail::parse_json(line, where);
        CorpusItem c;
        c.text = detail::require_string(detail::require_field(item, "text", where), where + ".text");
        c.features = FeatureVector(reg.size());
        const auto& values = detail::require_field(item, "values", where);
        for (const auto& id : detail::require_array(detail::require_field(item, "mask", where), where + ".mask")) {
            const auto key = detail::require_string(id, where + ".mask[]");
            const std::size_t f = reg.require_index(key);
            c.features.set(f, detail::require_number(detail::require_field(values, key, where + ".values"), where + ".values." + key));
        }
        corpus.push_back(std::move(c));
    }
    return corpus;
}

std::string feature_vector_json(const FeatureVector& v, const FeatureRegistry& reg)
{
    return feature_values_json(v, reg).dump();
}

} // namespace steer
