#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "r2r/r2r.hpp"

namespace {

int cmd_corpus_validate(const std::string& path, size_t pseudo_budget,
                        const std::string& cutoff) {
    r2r::CharacterCorpus corpus = r2r::load_corpus(path);
    r2r::ValidationPolicy policy;
    policy.pseudo_data_word_budget = pseudo_budget;
    if (!cutoff.empty()) {
        auto date = r2r::Date::parse(cutoff);
        if (!date) {
            std::cerr << "bad --cutoff date: " << cutoff << "\n";
            return 2;
        }
        policy.training_cutoff = *date;
    }
    r2r::ValidationReport report = r2r::validate_corpus(corpus, policy);
    for (const auto& f : report.findings) {
        std::cout << (f.level == r2r::FindingLevel::error ? "error" : "warning") << " ["
                  << f.rule << "] " << f.message << "\n";
    }
    std::cout << corpus.character_name << ": " << report.error_count() << " error(s), "
              << report.warning_count() << " warning(s)\n";
    return report.ok() ? 0 : 1;
}

r2r::TokenizerHandle load_tokenizer_opt(const std::string& dir) {
    if (dir.empty()) return r2r::word_tokenizer();
    return r2r::SubwordTokenizer::load(dir);
}

int cmd_prompt_build(const std::string& corpus_path, const std::string& framework_name,
                     size_t budget, const std::string& out, const std::string& tokenizer_dir,
                     const std::string& blurb, const std::string& context,
                     const std::string& reference_out) {
    auto framework = r2r::framework_from(framework_name);
    if (!framework) {
        std::cerr << "unknown framework: " << framework_name << "\n";
        return 2;
    }
    r2r::CharacterCorpus corpus = r2r::load_corpus(corpus_path);
    r2r::PromptOptions opts;
    opts.token_budget = budget;
    opts.tokenizer = load_tokenizer_opt(tokenizer_dir);
    if (!context.empty()) opts.context_notes = context;
    r2r::PromptBundle bundle = r2r::build_prompt(*framework, corpus, opts, blurb);
    r2r::write_file(out, bundle.rendered);
    if (!reference_out.empty()) r2r::write_file(reference_out, bundle.reference_dialogue);
    std::cout << "wrote " << out << " (" << bundle.token_count << " tokens, "
              << bundle.sections.size() << " sections)\n";
    return 0;
}

int cmd_score(const std::string& ref_path, const std::string& out_path,
              const std::string& tokenizer_dir, const std::string& stopwords,
              const std::string& format) {
    r2r::NormalizationRules rules;
    if (!stopwords.empty()) rules.stopword_list = r2r::load_stopwords(stopwords);
    auto tokenizer = load_tokenizer_opt(tokenizer_dir);
    std::string ref = r2r::read_file(ref_path);
    std::string out = r2r::read_file(out_path);
    r2r::MetricReport m = r2r::score_interaction(ref, out, rules, *tokenizer);
    if (format == "csv") {
        std::cout << "ioo,ior,lcs,nlcs,nlcs_by_out,ld,nld,ref_len,out_len\n";
        auto opt = [](const std::optional<double>& v) {
            return v ? std::to_string(*v) : std::string();
        };
        std::printf("%s,%s,%zu,%.9f,%.9f,%zu,%.9f,%zu,%zu\n", opt(m.ioo).c_str(),
                    opt(m.ior).c_str(), m.lcs, m.nlcs, m.nlcs_by_out, m.ld, m.nld, m.ref_len,
                    m.out_len);
    } else {
        std::cout << r2r::metric_report_to_json(m).dump(2) << "\n";
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    r2r::ExperimentConfig config = r2r::load_experiment_config(config_path);
    r2r::RunOptions opts;
    if (!out_dir.empty()) opts.output_dir = out_dir;
    auto run_dir = r2r::run_experiment(config, opts);
    std::cout << "run complete: " << run_dir.string() << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    auto summary = r2r::emit_reports(run_dir);
    std::cout << "reports written for " << summary["records"] << " records and "
              << summary["ballots"] << " ballots under " << run_dir << "/reports\n";
    return 0;
}

int cmd_verify(const std::string& run_dir) {
    auto problems = r2r::verify_run(run_dir);
    for (const auto& p : problems) std::cout << "problem: " << p << "\n";
    if (problems.empty()) {
        std::cout << "verify: OK\n";
        return 0;
    }
    std::cout << "verify: " << problems.size() << " problem(s)\n";
    return 1;
}

int cmd_cassette_synth(const std::string& config_path, const std::string& out) {
    r2r::ExperimentConfig config = r2r::load_experiment_config(config_path);
    auto recorder = std::make_shared<r2r::RecordingChatClient>(
        std::make_unique<r2r::ScriptedClient>(), out);
    r2r::RunOptions opts;
    opts.subject_client = recorder;
    for (const auto& judge : config.judge_endpoints) opts.judge_clients[judge] = recorder;
    auto tmp = std::filesystem::temp_directory_path() /
               ("r2r-synth-" + r2r::to_hex(r2r::fnv1a64(out)));
    std::filesystem::remove_all(tmp);
    opts.output_dir = tmp;
    r2r::run_experiment(config, opts);
    std::filesystem::remove_all(tmp);
    std::cout << "cassette written to " << out << "\n";
    return 0;
}

int cmd_cassette_fixtures(const std::string& corpus_path, const std::string& out_dir) {
    r2r::CharacterCorpus corpus = r2r::load_corpus(corpus_path);
    r2r::PromptBundle bundle = r2r::build_r2r_prompt(corpus);

    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
        std::filesystem::remove(dir / "ok.jsonl");
        r2r::RecordingChatClient rec(std::make_unique<r2r::ScriptedClient>(), dir / "ok.jsonl");
        rec.complete(r2r::ok_fixture_request(bundle.rendered));
    }
    {
        std::filesystem::remove(dir / "confidence.jsonl");
        r2r::RecordingChatClient rec(std::make_unique<r2r::ScriptedClient>(),
                                     dir / "confidence.jsonl");
        rec.complete(r2r::confidence67_fixture_request());
        rec.complete(r2r::year_fixture_request());
    }
    std::cout << "fixture cassettes written under " << out_dir << "\n";
    return 0;
}

std::string persona_slug(const std::string& name) {
    std::string slug;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (c == ' ' || c == '-')
            slug += '_';
    }
    return slug;
}

int cmd_personas_export(const std::string& out_dir) {
    for (auto setting : {r2r::Setting::election, r2r::Setting::tv, r2r::Setting::ceo,
                         r2r::Setting::authenticity}) {
        r2r::JudgePanel panel = r2r::build_panel(setting);
        for (const auto& judge : panel.judges) {
            auto path = std::filesystem::path(out_dir) / r2r::to_string(setting) /
                        (persona_slug(judge.name) + ".txt");
            r2r::write_file(path, r2r::persona_file_text(judge));
        }
    }
    std::cout << "personas exported under " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAGs-to-Riches role-play evaluation toolkit"};
    app.require_subcommand(1);

    // corpus validate
    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities")->require_subcommand(1);
    auto* validate = corpus_cmd->add_subcommand("validate", "Validate a corpus file");
    std::string corpus_path;
    size_t pseudo_budget = 150;
    std::string cutoff;
    validate->add_option("file", corpus_path, "corpus file")->required();
    validate->add_option("--pseudo-budget", pseudo_budget, "pseudo-data word budget");
    validate->add_option("--cutoff", cutoff, "training cutoff date (YYYY-MM-DD)");

    // prompt build
    auto* prompt_cmd = app.add_subcommand("prompt", "Prompt assembly")->require_subcommand(1);
    auto* build = prompt_cmd->add_subcommand("build", "Build a prompt from a corpus");
    std::string framework = "r2r", prompt_out, tokenizer_dir, blurb, context, reference_out;
    size_t budget = 4096;
    build->add_option("--corpus", corpus_path, "corpus file")->required();
    build->add_option("--framework", framework, "r2r | icl | zero-shot");
    build->add_option("--budget", budget, "token budget");
    build->add_option("--out", prompt_out, "output file for the rendered prompt")->required();
    build->add_option("--tokenizer", tokenizer_dir, "tokenizer directory (vocab.txt, merges.txt)");
    build->add_option("--setting-blurb", blurb, "zero-shot setting framing");
    build->add_option("--context", context, "context notes appended as a Context section");
    build->add_option("--reference-out", reference_out, "also write the reference dialogue");

    // score
    auto* score = app.add_subcommand("score", "Score a model output against a reference");
    std::string ref_path, out_path, stopwords, format = "json";
    score->add_option("--ref", ref_path, "reference dialogue file")->required();
    score->add_option("--out", out_path, "model output file")->required();
    score->add_option("--tokenizer", tokenizer_dir, "tokenizer directory");
    score->add_option("--stopwords", stopwords, "stopword file (one word per line)");
    score->add_option("--format", format, "json | csv");

    // run / report / verify
    auto* run = app.add_subcommand("run", "Run an experiment from a config");
    std::string config_path, run_out;
    run->add_option("--config", config_path, "experiment config")->required();
    run->add_option("--out", run_out, "output run directory (overrides config)");

    auto* report = app.add_subcommand("report", "Re-emit reports for a run directory");
    std::string run_dir;
    report->add_option("--run", run_dir, "run directory")->required();

    auto* verify = app.add_subcommand("verify", "Recompute aggregates and check a run");
    verify->add_option("--run", run_dir, "run directory")->required();

    // cassette
    auto* cassette = app.add_subcommand("cassette", "Cassette utilities")->require_subcommand(1);
    auto* synth = cassette->add_subcommand(
        "synth", "Record a full run against the deterministic scripted endpoint");
    std::string cassette_out;
    synth->add_option("--config", config_path, "experiment config")->required();
    synth->add_option("--out", cassette_out, "cassette file to write")->required();
    auto* fixtures = cassette->add_subcommand("fixtures", "Record the small fixture cassettes");
    std::string fixtures_dir;
    fixtures->add_option("--corpus", corpus_path, "corpus file")->required();
    fixtures->add_option("--out-dir", fixtures_dir, "directory for ok/confidence cassettes")
        ->required();

    // personas
    auto* personas = app.add_subcommand("personas", "Judge persona assets")->require_subcommand(1);
    auto* export_cmd = personas->add_subcommand("export", "Write persona asset files");
    std::string personas_dir;
    export_cmd->add_option("--out", personas_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_corpus_validate(corpus_path, pseudo_budget, cutoff);
        if (build->parsed())
            return cmd_prompt_build(corpus_path, framework, budget, prompt_out, tokenizer_dir,
                                    blurb, context, reference_out);
        if (score->parsed())
            return cmd_score(ref_path, out_path, tokenizer_dir, stopwords, format);
        if (run->parsed()) return cmd_run(config_path, run_out);
        if (report->parsed()) return cmd_report(run_dir);
        if (verify->parsed()) return cmd_verify(run_dir);
        if (synth->parsed()) return cmd_cassette_synth(config_path, cassette_out);
        if (fixtures->parsed()) return cmd_cassette_fixtures(corpus_path, fixtures_dir);
        if (export_cmd->parsed()) return cmd_personas_export(personas_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
