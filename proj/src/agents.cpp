#include "mdeval/agents.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "mdeval/hashing.hpp"
#include "mdeval/prompts.hpp"
#include "mdeval/rng.hpp"
#include "mdeval/selection.hpp"

namespace mdeval {

std::optional<std::string> decision_violation(const DecisionSet& d, const Universe& universe) {
    std::set<std::string> buys;
    for (const auto& c : d.buys) {
        if (!universe.contains(c)) return "unknown ticker " + c;
        if (!buys.insert(c).second) return "duplicate buy " + c;
    }
    std::set<std::string> sells;
    for (const auto& c : d.sells) {
        if (!universe.contains(c)) return "unknown ticker " + c;
        if (!sells.insert(c).second) return "duplicate sell " + c;
        if (buys.count(c)) return c + " is both bought and sold";
    }
    if (d.buys.empty() && d.sells.empty() && trim(d.remark).empty())
        return "a remark is required when no stock is selected";
    return std::nullopt;
}

std::string_view to_string(InvestorClass cls) {
    switch (cls) {
        case InvestorClass::LLM: return "LLM";
        case InvestorClass::Human: return "Human";
        case InvestorClass::Baseline: return "Baseline";
    }
    return "";
}

std::optional<InvestorClass> parse_investor_class(std::string_view text) {
    for (auto c : {InvestorClass::LLM, InvestorClass::Human, InvestorClass::Baseline})
        if (to_string(c) == text) return c;
    return std::nullopt;
}

json to_json(const DecisionRecord& r) {
    return {{"investor_id", r.decision.investor_id},
            {"investor_class", to_string(r.investor_class)},
            {"digest_id", r.decision.digest_id},
            {"buys", r.decision.buys},
            {"sells", r.decision.sells},
            {"remark", r.decision.remark},
            {"raw_reply_hash", r.raw_reply_hash}};
}

DecisionRecord decision_record_from_json(const json& j) {
    DecisionRecord r;
    r.decision.investor_id = j.at("investor_id").get<std::string>();
    r.decision.digest_id = j.at("digest_id").get<std::string>();
    r.decision.buys = j.at("buys").get<std::vector<std::string>>();
    r.decision.sells = j.at("sells").get<std::vector<std::string>>();
    r.decision.remark = j.value("remark", "");
    r.raw_reply_hash = j.value("raw_reply_hash", "");
    auto cls = parse_investor_class(j.value("investor_class", "Baseline"));
    if (!cls) throw Error(Errc::ParseError, "bad investor_class");
    r.investor_class = *cls;
    return r;
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

// Value after `KEY:` when the trimmed line starts with it (any case).
std::optional<std::string> field_value(std::string_view line, std::string_view key) {
    line = trim(line);
    if (line.size() < key.size() + 1) return std::nullopt;
    if (upper(line.substr(0, key.size())) != key || line[key.size()] != ':') return std::nullopt;
    return std::string(trim(line.substr(key.size() + 1)));
}

std::vector<std::string> parse_codes(const std::string& value, const Universe& universe, const char* side,
                                     std::vector<std::string>& warnings) {
    std::vector<std::string> codes;
    if (to_lower(trim(value)) == "none" || trim(value).empty()) return codes;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start <= value.size()) {
        auto comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string token = upper(trim(std::string_view(value).substr(start, comma - start)));
        start = comma + 1;
        if (token.empty() || token == "NONE") continue;
        if (!universe.contains(token)) {
            warnings.push_back(std::string("dropped unknown ") + side + " ticker '" + token + "'");
            continue;
        }
        if (!seen.insert(token).second) {
            warnings.push_back(std::string("collapsed duplicate ") + side + " ticker " + token);
            continue;
        }
        codes.push_back(token);
    }
    return codes;
}

}  // namespace

ParsedReply parse_decision_response(std::string_view text, const Universe& universe) {
    std::optional<std::string> buy_line, sell_line, remark_line;
    ParsedReply out;
    for (const auto& line : split_lines(text)) {
        if (auto v = field_value(line, "BUY")) {
            if (buy_line) out.warnings.push_back("ignored repeated BUY line");
            else buy_line = std::move(v);
        } else if (auto v2 = field_value(line, "SELL")) {
            if (sell_line) out.warnings.push_back("ignored repeated SELL line");
            else sell_line = std::move(v2);
        } else if (auto v3 = field_value(line, "REMARK")) {
            if (!remark_line) remark_line = std::move(v3);
        }
    }
    if (!buy_line && !sell_line) throw Error(Errc::UnparseableReply, "reply has neither a BUY: nor a SELL: line");

    auto buys = buy_line ? parse_codes(*buy_line, universe, "buy", out.warnings) : std::vector<std::string>{};
    auto sells = sell_line ? parse_codes(*sell_line, universe, "sell", out.warnings) : std::vector<std::string>{};
    const std::set<std::string> sell_set(sells.begin(), sells.end());
    std::set<std::string> conflict;
    for (const auto& c : buys)
        if (sell_set.count(c)) conflict.insert(c);
    for (const auto& c : conflict) out.warnings.push_back("conflict: " + c + " on both BUY and SELL, dropped");
    auto keep = [&](const std::string& c) { return conflict.count(c) == 0; };
    std::copy_if(buys.begin(), buys.end(), std::back_inserter(out.buys), keep);
    std::copy_if(sells.begin(), sells.end(), std::back_inserter(out.sells), keep);
    out.remark = remark_line.value_or("");
    return out;
}

void AgentConfig::validate() const {
    if (name.empty()) throw Error(Errc::InvalidConfig, "agent name is empty");
    if (kind == AgentKind::External) {
        if (!endpoint) throw Error(Errc::InvalidConfig, "external agent " + name + " has no endpoint");
        if (temperature != 0.0) throw Error(Errc::InvalidConfig, "external agent " + name + " must use temperature 0");
    }
    if (kind == AgentKind::Random && (p_buy < 0 || p_sell < 0 || p_buy + p_sell > 1.0))
        throw Error(Errc::InvalidConfig, "random agent " + name + " needs p_buy + p_sell <= 1");
}

DecisionSet random_agent_decide(std::uint64_t seed, const std::string& digest_id, const Universe& universe,
                                double p_buy, double p_sell) {
    if (p_buy < 0 || p_sell < 0 || p_buy + p_sell > 1.0)
        throw Error(Errc::InvalidConfig, "random agent needs p_buy + p_sell <= 1");
    Rng rng(derive_seed(seed, digest_id));
    DecisionSet d;
    d.digest_id = digest_id;
    for (const auto& t : universe.tickers()) {
        const double u = rng.uniform();
        if (u < p_buy) d.buys.push_back(t.code);
        else if (u < p_buy + p_sell) d.sells.push_back(t.code);
    }
    d.remark = (d.buys.empty() && d.sells.empty()) ? "no action (random draw)" : "random baseline";
    return d;
}

namespace {

// Buys names whose line reports a signed move above the threshold, sells
// those below its negative. Lines naming several companies are skipped.
DecisionSet momentum_decide(const AgentConfig& agent, const DigestView& digest, const Universe& universe) {
    static const std::regex kSignedPercent(R"(([+-]\d+(?:\.\d+)?)%)");
    MentionScanner scanner(universe);
    DecisionSet d;
    std::set<std::string> used;
    for (const auto& line : split_lines(digest.text)) {
        const auto codes = scanner.scan(line);
        if (codes.size() != 1 || used.count(codes[0])) continue;
        std::smatch m;
        if (!std::regex_search(line, m, kSignedPercent)) continue;
        const double move = std::stod(m[1].str()) / 100.0;
        if (move >= agent.momentum_threshold) d.buys.push_back(codes[0]);
        else if (move <= -agent.momentum_threshold) d.sells.push_back(codes[0]);
        else continue;
        used.insert(codes[0]);
    }
    d.remark = (d.buys.empty() && d.sells.empty()) ? "no move cleared the momentum threshold" : "momentum";
    return d;
}

void cap_positions(DecisionSet& d, std::size_t cap, std::vector<std::string>& warnings) {
    if (d.buys.size() + d.sells.size() <= cap) return;
    warnings.push_back("capped positions at " + std::to_string(cap));
    if (d.buys.size() >= cap) {
        d.buys.resize(cap);
        d.sells.clear();
    } else {
        d.sells.resize(cap - d.buys.size());
    }
    if (d.buys.empty() && d.sells.empty() && trim(d.remark).empty()) d.remark = "no action";
}

}  // namespace

AgentPrompt agent_prompt(const AgentConfig& agent, const DigestView& digest, const Universe& universe) {
    AgentPrompt p;
    p.system = std::string(agent_investor_prompt().text);
    p.system += digest.kind == DigestKind::MorningBrief
                    ? "\nHorizon: from today's open to today's close.\n"
                    : "\nHorizon: from today's close to the next trading day's open.\n";
    p.system += "\nUniverse (code,name):\n";
    std::vector<std::string> listed;
    if (agent.restrict_to_digest) {
        listed = MentionScanner(universe).scan(digest.text);
    } else {
        for (const auto& t : universe.tickers()) listed.push_back(t.code);
    }
    for (const auto& code : listed) p.system += code + "," + universe.find(code)->name + "\n";
    p.user = digest.text;
    return p;
}

AgentDecision decide(const AgentConfig& agent, const DigestView& digest, const Universe& universe) {
    if (trim(digest.text).empty()) throw Error(Errc::InvalidConfig, "digest " + digest.id + " has no text");
    AgentDecision out;
    switch (agent.kind) {
        case AgentKind::NoAction:
            out.decision.remark = "no action";
            break;
        case AgentKind::Random:
            out.decision = random_agent_decide(agent.seed, digest.id, universe, agent.p_buy, agent.p_sell);
            break;
        case AgentKind::MomentumReader:
            out.decision = momentum_decide(agent, digest, universe);
            break;
        case AgentKind::External: {
            agent.validate();
            AgentPrompt prompt = agent_prompt(agent, digest, universe);
            std::optional<ParsedReply> parsed;
            for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
                if (attempt == 1)
                    prompt.user += "\n\nYour previous reply did not follow the required format. Reply with exactly "
                                   "three lines: BUY: ..., SELL: ..., REMARK: ...";
                out.raw_replies.push_back(post_completion(*agent.endpoint, prompt.system, prompt.user, 0.0));
                try {
                    parsed = parse_decision_response(out.raw_replies.back(), universe);
                } catch (const Error& e) {
                    if (e.code() != Errc::UnparseableReply || attempt == 1) throw;
                    out.warnings.push_back("reformat retry after unparseable reply");
                }
            }
            out.decision.buys = std::move(parsed->buys);
            out.decision.sells = std::move(parsed->sells);
            out.decision.remark = std::move(parsed->remark);
            for (auto& w : parsed->warnings) out.warnings.push_back(std::move(w));
            break;
        }
    }
    out.decision.investor_id = agent.name;
    out.decision.digest_id = digest.id;
    if (agent.max_positions) cap_positions(out.decision, *agent.max_positions, out.warnings);
    if (out.decision.buys.empty() && out.decision.sells.empty() && trim(out.decision.remark).empty())
        out.decision.remark = "no action";
    return out;
}

}  // namespace mdeval
