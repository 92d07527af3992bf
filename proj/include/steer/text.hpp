#pragma once

#include "steer/registry.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace steer {

enum class Polarity { Positive, Negative };

/// Where the description generator may place a phrase. Parsing ignores slots.
enum class PhraseSlot {
    Noun,      ///< "a person with <phrase>"
    Adjective, ///< "a <phrase> person"
    Subject,   ///< replaces "person"
};

struct LexiconEntry {
    std::vector<std::string> phrase;
    std::string feature_id;
    std::size_t feature_index = 0;
    double base_value = 0.0;
    Polarity polarity = Polarity::Positive;
    PhraseSlot slot = PhraseSlot::Noun;
    /// Modifier the generator uses to strengthen this phrase; empty for the template default.
    std::string intensifier;
};

struct ModifierRule {
    std::vector<std::string> phrase;
    double multiplier = 1.0;
};

/// Knobs for generated descriptions.
struct DescriptionTemplates {
    std::string subject = "person";
    std::string connector = "with";
    std::string intensifier = "very";
    std::string diminisher = "slightly";
    std::string negation = "no";
    /// Groups of feature ids that never co-occur in a sampled corpus item.
    std::vector<std::vector<std::string>> exclusive;
    std::size_t max_features = 8;
};

/// Phrase table bound to a registry.
class Lexicon {
public:
    Lexicon(std::vector<LexiconEntry> entries,
            std::vector<ModifierRule> modifiers,
            std::vector<std::string> negations,
            DescriptionTemplates templates,
            const FeatureRegistry& reg);

    const std::vector<LexiconEntry>& entries() const { return entries_; }
    const std::vector<ModifierRule>& modifiers() const { return modifiers_; }
    const std::vector<std::string>& negations() const { return negations_; }
    const DescriptionTemplates& templates() const { return templates_; }
    std::size_t feature_count() const { return feature_count_; }

    /// Longest entry whose phrase starts at tokens[pos].
    const LexiconEntry* longest_entry_at(std::span<const std::string> tokens, std::size_t pos) const;
    /// Longest modifier whose phrase ends just before tokens[end].
    const ModifierRule* longest_modifier_ending_at(std::span<const std::string> tokens, std::size_t end) const;
    const ModifierRule* find_modifier(std::string_view phrase) const;
    bool is_negation(std::string_view token) const;

private:
    std::vector<LexiconEntry> entries_;
    std::vector<ModifierRule> modifiers_;
    std::vector<std::string> negations_;
    DescriptionTemplates templates_;
    std::size_t feature_count_ = 0;
    std::size_t longest_entry_ = 0;
    std::size_t longest_modifier_ = 0;
};

Lexicon parse_lexicon(std::string_view json_text, const FeatureRegistry& reg);
/// Loads a lexicon file, or the built-in lexicon when no path is given.
Lexicon load_lexicon(const std::optional<std::filesystem::path>& path, const FeatureRegistry& reg);

/// Lowercases, splits on anything that is not a letter or digit. `breaks`
/// receives, per token, whether a clause punctuation mark (.,;:!?) precedes it.
std::vector<std::string> tokenize(std::string_view text, std::vector<bool>* breaks = nullptr);

/// Value of a phrase under its modifiers and optional negation, clamped to
/// the feature range. Parsing and generation share this arithmetic.
double phrase_value(double base, std::span<const double> multipliers, bool negated, const ValueRange& range);

struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const TokenSpan&) const = default;
};

struct ParseTrace {
    std::vector<std::string> tokens;
    std::vector<TokenSpan> spans;
    /// One (feature id, value) per span, in text order.
    std::vector<std::pair<std::string, double>> resolved;
    std::vector<std::string> unmatched;
};

struct ParseResult {
    FeatureVector features;
    ParseTrace trace;
};

/// Greedy longest-match parse. Never fails: text without known phrases
/// yields an all-false mask.
ParseResult parse(std::string_view text, const Lexicon& lexicon, const FeatureRegistry& reg);

/// Renders a description whose parse reproduces `v`. Throws
/// UnrepresentableValueError when a masked value has no phrase rendering.
std::string generate_description(const FeatureVector& v, const Lexicon& lexicon, const FeatureRegistry& reg, std::uint64_t rng_seed);

struct CorpusItem {
    std::string text;
    FeatureVector features;
};

std::vector<CorpusItem> build_corpus(std::size_t n, const Lexicon& lexicon, const FeatureRegistry& reg, std::uint64_t rng_seed);

// Corpus file: JSON Lines {"text", "values": {id: v}, "mask": [ids]}.
std::string serialize_corpus(const std::vector<CorpusItem>& corpus, const FeatureRegistry& reg);
std::vector<CorpusItem> parse_corpus(std::string_view jsonl, const FeatureRegistry& reg);

/// {"values": {id: v}, "mask": [ids]} for the masked features.
std::string feature_vector_json(const FeatureVector& v, const FeatureRegistry& reg);

} // namespace steer
