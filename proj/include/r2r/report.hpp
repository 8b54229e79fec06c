#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2r/errors.hpp"
#include "r2r/runner.hpp"

namespace r2r {

namespace detail {

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::vector<std::string> escaped;
    escaped.reserve(fields.size());
    for (const auto& f : fields) escaped.push_back(csv_field(f));
    return join(escaped, ",");
}

inline std::vector<nlohmann::json> load_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    if (!std::filesystem::exists(path)) return out;
    size_t lineno = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw IoError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

struct MeanAcc {
    double sum = 0;
    size_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    bool empty() const { return n == 0; }
    double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

struct RunData {
    nlohmann::json manifest;
    std::vector<InteractionRecord> records;
    std::vector<BallotRecord> ballots;

    std::vector<std::string> frameworks;
    std::vector<std::string> characters;
    std::vector<std::string> backbones;
    // setting name -> (panel, question id -> category, ordered categories)
    struct SettingInfo {
        std::string panel;
        std::map<std::string, std::string> category_of;
        std::vector<std::string> categories;
        std::set<std::string> human_questions;
        std::vector<std::string> character_names;
    };
    std::vector<std::pair<std::string, SettingInfo>> settings;

    const SettingInfo* setting(const std::string& name) const {
        for (const auto& [n, info] : settings) {
            if (n == name) return &info;
        }
        return nullptr;
    }
};

inline RunData load_run(const std::filesystem::path& run_dir) {
    RunData data;
    try {
        data.manifest = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw MissingData("manifest.json unreadable in " + run_dir.string() + ": " + e.what());
    }
    for (const auto& j : load_jsonl(run_dir / "records.jsonl"))
        data.records.push_back(record_from_json(j));
    for (const auto& j : load_jsonl(run_dir / "ballots.jsonl"))
        data.ballots.push_back(ballot_record_from_json(j));

    for (const auto& f : data.manifest.at("frameworks")) data.frameworks.push_back(f);
    for (const auto& c : data.manifest.at("characters")) data.characters.push_back(c.at("name"));
    for (const auto& b : data.manifest.at("judge_endpoints")) data.backbones.push_back(b);
    for (const auto& s : data.manifest.at("settings")) {
        RunData::SettingInfo info;
        info.panel = s.at("panel").get<std::string>();
        for (const auto& q : s.at("questions")) {
            std::string cat = q.at("category").is_null() ? std::string("Uncategorized")
                                                         : q.at("category").get<std::string>();
            info.category_of[q.at("id").get<std::string>()] = cat;
            bool seen = false;
            for (const auto& c : info.categories) seen |= c == cat;
            if (!seen) info.categories.push_back(cat);
        }
        if (s.contains("human_responses") && !s.at("human_responses").is_null()) {
            for (auto it = s.at("human_responses").begin(); it != s.at("human_responses").end();
                 ++it)
                info.human_questions.insert(it.key());
        }
        for (const auto& n : s.at("characters")) info.character_names.push_back(n);
        data.settings.emplace_back(s.at("name").get<std::string>(), std::move(info));
    }
    return data;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

// Writes role_play.csv, authenticity.csv, vote_share.csv, tallies.json,
// confidence.csv, and plot_data.json under <run_dir>/reports. All output is
// byte-deterministic for a given records/ballots/manifest triple.
inline nlohmann::json emit_reports(const std::filesystem::path& run_dir) {
    using detail::MeanAcc;
    detail::RunData data = detail::load_run(run_dir);

    // every ballot must reference persisted responses (or shipped human text)
    {
        std::set<std::string> record_keys;
        for (const auto& r : data.records) {
            record_keys.insert(r.character + '\x1f' + r.setting + '\x1f' + r.question_id +
                               '\x1f' + std::to_string(r.trial) + '\x1f' + to_string(r.framework));
        }
        for (const auto& b : data.ballots) {
            const auto* info = data.setting(b.setting);
            if (!info) throw MissingData("ballot references unknown setting " + b.setting);
            for (const auto& candidate : b.ballot.presented_order) {
                if (candidate == "human") {
                    if (!info->human_questions.count(b.ballot.question_id))
                        throw MissingData("ballot for " + b.ballot.question_id +
                                          " references human response that was not supplied");
                    continue;
                }
                std::string key = b.character + '\x1f' + b.setting + '\x1f' +
                                  b.ballot.question_id + '\x1f' + std::to_string(b.trial) +
                                  '\x1f' + candidate;
                if (!record_keys.count(key))
                    throw MissingData("ballot references missing record for candidate " +
                                      candidate + " on " + b.ballot.question_id);
            }
        }
    }

    const std::filesystem::path reports = run_dir / "reports";
    std::filesystem::create_directories(reports);

    auto is_auth = [&](const std::string& setting_name) {
        const auto* info = data.setting(setting_name);
        return info && info->panel == "authenticity";
    };

    // ---- role_play.csv: one row per framework x character plus Total ----
    {
        std::vector<std::string> header{"framework", "character"};
        for (const auto& b : data.backbones) header.push_back("votes_" + b);
        header.insert(header.end(), {"lcs", "nlcs", "ioo_pct", "ior_pct"});
        std::vector<std::string> lines{detail::csv_row(header)};

        for (const auto& fw : data.frameworks) {
            auto emit_row = [&](const std::string& character, bool total) {
                std::vector<std::string> row{fw, total ? "Total" : character};
                for (const auto& backbone : data.backbones) {
                    int votes = 0;
                    for (const auto& b : data.ballots) {
                        if (is_auth(b.setting) || b.backbone != backbone) continue;
                        if (!total && b.character != character) continue;
                        votes += b.ballot.choice == fw;
                    }
                    row.push_back(std::to_string(votes));
                }
                MeanAcc lcs_acc, nlcs_acc, ioo_acc, ior_acc;
                for (const auto& r : data.records) {
                    if (is_auth(r.setting) || to_string(r.framework) != fw) continue;
                    if (!total && r.character != character) continue;
                    lcs_acc.add(static_cast<double>(r.metrics.lcs));
                    nlcs_acc.add(r.metrics.nlcs);
                    if (r.metrics.ioo) ioo_acc.add(*r.metrics.ioo);
                    if (r.metrics.ior) ior_acc.add(*r.metrics.ior);
                }
                bool zero_shot = fw == "zero_shot";
                row.push_back(zero_shot || lcs_acc.empty() ? "" : detail::fmt6(lcs_acc.mean()));
                row.push_back(zero_shot || nlcs_acc.empty() ? "" : detail::fmt6(nlcs_acc.mean()));
                row.push_back(zero_shot || ioo_acc.empty() ? ""
                                                           : detail::fmt6(100.0 * ioo_acc.mean()));
                row.push_back(zero_shot || ior_acc.empty() ? ""
                                                           : detail::fmt6(100.0 * ior_acc.mean()));
                lines.push_back(detail::csv_row(row));
            };
            for (const auto& character : data.characters) emit_row(character, false);
            emit_row("", true);
        }
        write_file(reports / "role_play.csv", join(lines, "\n") + "\n");
    }

    // ---- authenticity.csv: one row per framework x question category ----
    {
        std::vector<std::string> categories;
        for (const auto& [name, info] : data.settings) {
            if (info.panel != "authenticity") continue;
            for (const auto& c : info.categories) {
                bool seen = false;
                for (const auto& have : categories) seen |= have == c;
                if (!seen) categories.push_back(c);
            }
        }
        bool human_present = false;
        for (const auto& b : data.ballots) {
            if (!is_auth(b.setting)) continue;
            for (const auto& id : b.ballot.presented_order) human_present |= id == "human";
        }

        std::vector<std::string> header{"framework", "category"};
        for (const auto& b : data.backbones) header.push_back("votes_" + b);
        header.insert(header.end(), {"lcs", "nlcs", "ioo_pct", "ior_pct"});
        std::vector<std::string> lines{detail::csv_row(header)};

        std::vector<std::string> row_ids = data.frameworks;
        if (human_present) row_ids.push_back("human");
        auto category_of = [&](const BallotRecord& b) -> std::string {
            const auto* info = data.setting(b.setting);
            auto it = info->category_of.find(b.ballot.question_id);
            return it == info->category_of.end() ? "Uncategorized" : it->second;
        };
        for (const auto& fw : row_ids) {
            auto emit_row = [&](const std::string& category, bool total) {
                std::vector<std::string> row{fw, total ? "Total" : category};
                for (const auto& backbone : data.backbones) {
                    int votes = 0;
                    for (const auto& b : data.ballots) {
                        if (!is_auth(b.setting) || b.backbone != backbone) continue;
                        if (!total && category_of(b) != category) continue;
                        votes += b.ballot.choice == fw;
                    }
                    row.push_back(std::to_string(votes));
                }
                MeanAcc lcs_acc, nlcs_acc, ioo_acc, ior_acc;
                for (const auto& r : data.records) {
                    if (!is_auth(r.setting) || to_string(r.framework) != fw) continue;
                    const auto* info = data.setting(r.setting);
                    auto it = info->category_of.find(r.question_id);
                    std::string cat =
                        it == info->category_of.end() ? "Uncategorized" : it->second;
                    if (!total && cat != category) continue;
                    lcs_acc.add(static_cast<double>(r.metrics.lcs));
                    nlcs_acc.add(r.metrics.nlcs);
                    if (r.metrics.ioo) ioo_acc.add(*r.metrics.ioo);
                    if (r.metrics.ior) ior_acc.add(*r.metrics.ior);
                }
                bool metricless = fw == "zero_shot" || fw == "human";
                row.push_back(metricless || lcs_acc.empty() ? "" : detail::fmt6(lcs_acc.mean()));
                row.push_back(metricless || nlcs_acc.empty() ? ""
                                                             : detail::fmt6(nlcs_acc.mean()));
                row.push_back(metricless || ioo_acc.empty()
                                  ? ""
                                  : detail::fmt6(100.0 * ioo_acc.mean()));
                row.push_back(metricless || ior_acc.empty()
                                  ? ""
                                  : detail::fmt6(100.0 * ior_acc.mean()));
                lines.push_back(detail::csv_row(row));
            };
            for (const auto& category : categories) emit_row(category, false);
            if (!categories.empty()) emit_row("", true);
        }
        write_file(reports / "authenticity.csv", join(lines, "\n") + "\n");
    }

    // ---- tallies.json: per (setting, character, backbone) ----
    nlohmann::json tallies = nlohmann::json::array();
    {
        for (const auto& [setting_name, info] : data.settings) {
            for (const auto& character : info.character_names) {
                for (const auto& backbone : data.backbones) {
                    std::vector<Ballot> group;
                    for (const auto& b : data.ballots) {
                        if (b.setting == setting_name && b.character == character &&
                            b.backbone == backbone)
                            group.push_back(b.ballot);
                    }
                    if (group.empty()) continue;
                    Tally t = tally(group);
                    nlohmann::json jt;
                    jt["setting"] = setting_name;
                    jt["character"] = character;
                    jt["backbone"] = backbone;
                    jt["per_candidate"] = t.per_candidate;
                    jt["abstentions"] = t.abstentions;
                    jt["ballots_cast"] = t.ballots_cast;
                    tallies.push_back(std::move(jt));
                }
            }
        }
        write_file(run_dir / "reports" / "tallies.json", tallies.dump(2) + "\n");
    }

    // ---- vote_share.csv: per (setting, backbone, candidate) ----
    nlohmann::json vote_shares = nlohmann::json::array();
    {
        std::vector<std::string> lines{
            detail::csv_row({"setting", "backbone", "candidate", "votes", "share_pct"})};
        for (const auto& [setting_name, info] : data.settings) {
            for (const auto& backbone : data.backbones) {
                int cast = 0;
                std::map<std::string, int> votes;
                std::set<std::string> universe;
                for (const auto& b : data.ballots) {
                    if (b.setting != setting_name || b.backbone != backbone) continue;
                    ++cast;
                    for (const auto& id : b.ballot.presented_order) universe.insert(id);
                    ++votes[b.ballot.choice];
                }
                if (cast == 0) continue;
                std::vector<std::string> order;
                for (const auto& fw : data.frameworks)
                    if (universe.count(fw)) order.push_back(fw);
                if (universe.count("human")) order.push_back("human");
                order.push_back(std::string(kAbstain));
                for (const auto& candidate : order) {
                    int v = votes.count(candidate) ? votes[candidate] : 0;
                    double share = 100.0 * v / cast;
                    lines.push_back(detail::csv_row({setting_name, backbone, candidate,
                                                     std::to_string(v), detail::fmt6(share)}));
                    vote_shares.push_back({{"setting", setting_name},
                                           {"backbone", backbone},
                                           {"candidate", candidate},
                                           {"share_pct", share}});
                }
            }
        }
        write_file(reports / "vote_share.csv", join(lines, "\n") + "\n");
    }

    // ---- confidence.csv + plot data ----
    {
        std::vector<std::string> lines{detail::csv_row({"character", "framework", "setting",
                                                        "question_id", "trial", "answer_token",
                                                        "probability", "rank_in_top_k"})};
        for (const auto& r : data.records) {
            if (!r.confidence) continue;
            lines.push_back(detail::csv_row(
                {r.character, to_string(r.framework), r.setting, r.question_id,
                 std::to_string(r.trial), r.confidence->answer_token,
                 detail::fmt6(r.confidence->probability),
                 std::to_string(r.confidence->rank_in_top_k)}));
        }
        write_file(reports / "confidence.csv", join(lines, "\n") + "\n");

        nlohmann::json bars = nlohmann::json::array();
        for (const auto& character : data.characters) {
            for (const auto& fw : data.frameworks) {
                MeanAcc acc;
                for (const auto& r : data.records) {
                    if (r.character == character && to_string(r.framework) == fw && r.confidence)
                        acc.add(r.confidence->probability);
                }
                if (!acc.empty()) {
                    bars.push_back({{"character", character},
                                    {"framework", fw},
                                    {"mean_probability", acc.mean()}});
                }
            }
        }
        nlohmann::json plot;
        plot["confidence_bars"] = std::move(bars);
        plot["vote_shares"] = std::move(vote_shares);
        write_file(reports / "plot_data.json", plot.dump(2) + "\n");
    }

    nlohmann::json summary;
    summary["run_dir"] = run_dir.string();
    summary["records"] = data.records.size();
    summary["ballots"] = data.ballots.size();
    summary["tallies"] = tallies.size();
    return summary;
}

// ---------------------------------------------------------------------------
// Verification: recompute everything from the raw record/ballot lines and
// compare against the emitted report files.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
        } else if (c == '\n') {
            row.push_back(field);
            field.clear();
            rows.push_back(row);
            row.clear();
        } else {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

// Returns a list of problems; empty means the run verifies clean.
inline std::vector<std::string> verify_run(const std::filesystem::path& run_dir) {
    std::vector<std::string> problems;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
    } catch (const std::exception& e) {
        return {std::string("cannot read manifest.json: ") + e.what()};
    }
    auto records = detail::load_jsonl(run_dir / "records.jsonl");
    auto ballots = detail::load_jsonl(run_dir / "ballots.jsonl");
    auto failures = detail::load_jsonl(run_dir / "failures.jsonl");

    auto cell_key = [](const std::string& ch, const std::string& fw, const std::string& st,
                       const std::string& q, int trial) {
        return ch + '\x1f' + fw + '\x1f' + st + '\x1f' + q + '\x1f' + std::to_string(trial);
    };

    // 1. every enumerated cell is in records or in the failure log, once
    {
        std::map<std::string, int> seen;
        for (const auto& r : records)
            ++seen[cell_key(r["character"], r["framework"], r["setting"], r["question_id"],
                            r["trial"].get<int>())];
        for (const auto& f : failures) {
            if (f.value("kind", "") == "interaction")
                ++seen[cell_key(f["character"], f["framework"], f["setting"], f["question_id"],
                                f["trial"].get<int>())];
        }
        size_t expected = 0;
        int trials = manifest["trials"].get<int>();
        for (const auto& c : manifest["characters"]) {
            std::string name = c["name"];
            for (const auto& fw : manifest["frameworks"]) {
                for (const auto& s : manifest["settings"]) {
                    bool applicable = false;
                    for (const auto& n : s["characters"]) applicable |= n == name;
                    if (!applicable) continue;
                    for (const auto& q : s["questions"]) {
                        for (int t = 0; t < trials; ++t) {
                            ++expected;
                            std::string key = cell_key(name, fw, s["name"],
                                                       q["id"].get<std::string>(), t);
                            auto it = seen.find(key);
                            if (it == seen.end()) {
                                problems.push_back("cell neither recorded nor failed: " + key);
                            } else if (it->second != 1) {
                                problems.push_back("cell appears " + std::to_string(it->second) +
                                                   " times: " + key);
                            }
                            seen.erase(key);
                        }
                    }
                }
            }
        }
        for (const auto& [key, n] : seen)
            problems.push_back("record for unenumerated cell: " + key);
    }

    // 2. tallies: conservation and agreement with a fresh count
    try {
        nlohmann::json tallies =
            nlohmann::json::parse(read_file(run_dir / "reports" / "tallies.json"));
        for (const auto& t : tallies) {
            int sum = 0;
            for (auto it = t["per_candidate"].begin(); it != t["per_candidate"].end(); ++it)
                sum += it->get<int>();
            if (sum + t["abstentions"].get<int>() != t["ballots_cast"].get<int>())
                problems.push_back("tally conservation violated for " +
                                   t["setting"].get<std::string>() + "/" +
                                   t["character"].get<std::string>() + "/" +
                                   t["backbone"].get<std::string>());
            int cast = 0, abst = 0;
            std::map<std::string, int> counts;
            for (auto it = t["per_candidate"].begin(); it != t["per_candidate"].end(); ++it)
                counts[it.key()] = 0;
            for (const auto& b : ballots) {
                if (b["setting"] != t["setting"] || b["character"] != t["character"] ||
                    b["backbone"] != t["backbone"])
                    continue;
                ++cast;
                std::string choice = b["choice"];
                if (choice == "ABSTAIN") ++abst;
                else ++counts[choice];
            }
            bool match = cast == t["ballots_cast"].get<int>() &&
                         abst == t["abstentions"].get<int>();
            for (auto it = t["per_candidate"].begin(); match && it != t["per_candidate"].end();
                 ++it)
                match = counts[it.key()] == it->get<int>();
            if (!match)
                problems.push_back("tally disagrees with recount for " +
                                   t["setting"].get<std::string>() + "/" +
                                   t["character"].get<std::string>() + "/" +
                                   t["backbone"].get<std::string>());
        }
    } catch (const std::exception& e) {
        problems.push_back(std::string("cannot verify tallies.json: ") + e.what());
    }

    // 3. role_play.csv and authenticity.csv against a fresh aggregation
    auto panel_of = [&](const std::string& setting_name) -> std::string {
        for (const auto& s : manifest["settings"]) {
            if (s["name"] == setting_name) return s["panel"];
        }
        return "";
    };
    auto category_of = [&](const std::string& setting_name, const std::string& qid) {
        for (const auto& s : manifest["settings"]) {
            if (s["name"] != setting_name) continue;
            for (const auto& q : s["questions"]) {
                if (q["id"] == qid)
                    return q["category"].is_null() ? std::string("Uncategorized")
                                                   : q["category"].get<std::string>();
            }
        }
        return std::string("Uncategorized");
    };

    auto check_table = [&](const std::string& file, bool auth_table) {
        std::string path = (run_dir / "reports" / file).string();
        std::string text;
        try {
            text = read_file(path);
        } catch (const std::exception& e) {
            problems.push_back("cannot read " + file + ": " + e.what());
            return;
        }
        auto rows = detail::parse_csv(text);
        if (rows.empty()) {
            problems.push_back(file + " is empty");
            return;
        }
        const auto& header = rows[0];
        for (size_t ri = 1; ri < rows.size(); ++ri) {
            const auto& row = rows[ri];
            if (row.size() != header.size()) {
                problems.push_back(file + " row " + std::to_string(ri) + " is ragged");
                continue;
            }
            const std::string& fw = row[0];
            const std::string& group = row[1];  // character or category
            bool total = group == "Total";
            for (size_t col = 2; col < header.size(); ++col) {
                const std::string& name = header[col];
                std::string expect;
                if (name.rfind("votes_", 0) == 0) {
                    std::string backbone = name.substr(6);
                    int votes = 0;
                    for (const auto& b : ballots) {
                        bool auth = panel_of(b["setting"]) == "authenticity";
                        if (auth != auth_table || b["backbone"] != backbone) continue;
                        if (!total) {
                            if (auth_table) {
                                if (category_of(b["setting"], b["question_id"]) != group)
                                    continue;
                            } else if (b["character"] != group) {
                                continue;
                            }
                        }
                        votes += b["choice"] == fw;
                    }
                    expect = std::to_string(votes);
                } else {
                    detail::MeanAcc acc;
                    for (const auto& r : records) {
                        bool auth = panel_of(r["setting"]) == "authenticity";
                        if (auth != auth_table || r["framework"] != fw) continue;
                        if (!total) {
                            if (auth_table) {
                                if (category_of(r["setting"], r["question_id"]) != group)
                                    continue;
                            } else if (r["character"] != group) {
                                continue;
                            }
                        }
                        const auto& m = r["metrics"];
                        if (name == "lcs") acc.add(m["lcs"].get<double>());
                        else if (name == "nlcs") acc.add(m["nlcs"].get<double>());
                        else if (name == "ioo_pct" && !m["ioo"].is_null())
                            acc.add(100.0 * m["ioo"].get<double>());
                        else if (name == "ior_pct" && !m["ior"].is_null())
                            acc.add(100.0 * m["ior"].get<double>());
                    }
                    bool metricless = fw == "zero_shot" || fw == "human";
                    expect = metricless || acc.empty() ? "" : detail::fmt6(acc.mean());
                }
                if (row[col] != expect) {
                    problems.push_back(file + " " + fw + "/" + group + " " + header[col] +
                                       ": reported '" + row[col] + "' recomputed '" + expect +
                                       "'");
                }
            }
        }
    };
    check_table("role_play.csv", false);
    check_table("authenticity.csv", true);

    return problems;
}

}  // namespace r2r
