#include <doctest.h>

#include <string>
#include <vector>

#include "verity/report.hpp"

#include "test_support.hpp"

using namespace verity;

namespace {

/// Mock answers for the six-sentence HTML fixture. Five judged scores
/// (100, 85, 80, 50, 0) average to 63; the sixth sentence is non-verifiable.
std::shared_ptr<MockModelBackend> doc6_backend() {
    auto mock = std::make_shared<MockModelBackend>();
    mock->answers["Trade across the region quadrupled in a single decade."] =
        "Veracity score: 100% (True), False Part: /";
    mock->answers["The harbor city has always welcomed every merchant fleet."] =
        "Veracity score: 85% (Mostly True), False Part: always welcomed, Reason: Records show "
        "several embargoes.";
    mock->answers["Grain reserves kept pace with population growth."] =
        "Veracity score: 80% (Mostly True), False Part: kept pace";
    mock->answers["Officials say the aqueduct was finished in 2018."] =
        "Veracity score: 50% (Mostly True), False Part: finished in 2018";
    mock->answers["The <b> tag museum opened with zero visitors."] =
        "Veracity score: 0% (False), False Part: zero visitors, Reason: Opening day drew a crowd.";
    mock->answers["The riverside museum opened with zero visitors."] =
        "Veracity score: 0% (False), False Part: zero visitors, Reason: Opening day drew a crowd.";
    mock->answers["Some say the moon is made of green cheese."] = "null";
    return mock;
}

SourceDocument doc6() {
    return extract_plaintext(testsup::read_file(testsup::fixture_path("doc6.txt")), "doc6.txt");
}

AssessOptions fixed_options(int concurrency = 1) {
    AssessOptions options;
    options.concurrency = concurrency;
    options.created_at = "2026-01-01T00:00:00Z";
    return options;
}

std::string strip_tags(const std::string& html) {
    std::string out;
    bool in_tag = false;
    for (char c : html) {
        if (c == '<') in_tag = true;
        else if (c == '>') in_tag = false;
        else if (!in_tag) out += c;
    }
    return out;
}

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        if (s.compare(i, 5, "&amp;") == 0) { out += '&'; i += 5; }
        else if (s.compare(i, 4, "&lt;") == 0) { out += '<'; i += 4; }
        else if (s.compare(i, 4, "&gt;") == 0) { out += '>'; i += 4; }
        else if (s.compare(i, 6, "&quot;") == 0) { out += '"'; i += 6; }
        else if (s.compare(i, 5, "&#39;") == 0) { out += '\''; i += 5; }
        else { out += s[i]; ++i; }
    }
    return out;
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++count;
    return count;
}

}  // namespace

TEST_CASE("assess: three-sentence fixture composes to global 50") {
    auto mock = std::make_shared<MockModelBackend>();
    mock->answers["First one."] = "Veracity score: 100% (True), False Part: /";
    mock->answers["Second one."] = "Veracity score: 0% (False), False Part: Second";
    mock->answers["Third one."] = "null";
    const SourceDocument doc = extract_plaintext("First one. Second one. Third one.", "fixture");

    const Report report = assess_document(doc, *mock, nullptr, fixed_options());
    REQUIRE(report.sentences.size() == 3);
    REQUIRE(report.verdicts.size() == 3);
    CHECK(report.global.mean_percent == 50);
    CHECK(report.global.judged_count == 2);
    CHECK(report.global.excluded_count == 1);
    CHECK(report.verdicts[2].verdict.outcome == Outcome::NonVerifiable);
    CHECK(report.marks[1].size() == 1);
    CHECK(report.warnings.empty());
    // Recomputable invariant.
    CHECK(report.global == global_score(report.verdicts));
}

TEST_CASE("assess: gibberish answer downgrades one sentence, others survive") {
    auto mock = std::make_shared<MockModelBackend>();
    mock->answers["Good sentence."] = "Veracity score: 100% (True), False Part: /";
    mock->answers["Bad sentence."] = "complete gibberish with no grammar";
    const SourceDocument doc = extract_plaintext("Good sentence. Bad sentence.");

    const Report report = assess_document(doc, *mock, nullptr, fixed_options());
    CHECK(report.verdicts[0].verdict.score == 100);
    CHECK(report.verdicts[1].verdict.outcome == Outcome::UnableToJudge);
    CHECK(report.warnings.size() == 1);
    CHECK(report.global.mean_percent == 100);
}

TEST_CASE("assess: provider failure downgrades instead of aborting") {
    struct FlakyBackend : ModelBackend {
        std::string complete(const ModelRequest& request) override {
            if (request.messages.back().content.find("Poison.") != std::string::npos)
                throw TransientExhausted("backend down");
            return "Veracity score: 80% (Mostly True), False Part: /";
        }
    } backend;
    const SourceDocument doc = extract_plaintext("Fine. Poison. Fine again.");
    const Report report = assess_document(doc, backend, nullptr, fixed_options());
    CHECK(report.verdicts[1].verdict.outcome == Outcome::UnableToJudge);
    CHECK(report.verdicts[0].verdict.score == 80);
    CHECK(report.verdicts[2].verdict.score == 80);
    CHECK(report.warnings.size() == 1);
}

TEST_CASE("assess: empty document yields an empty report, not an error") {
    auto mock = std::make_shared<MockModelBackend>();
    const Report report = assess_document(extract_plaintext("   "), *mock, nullptr, fixed_options());
    CHECK(report.sentences.empty());
    CHECK_FALSE(report.global.mean_percent.has_value());
    const std::string json = render_json(report);
    CHECK(json.find("\"sentences\": []") != std::string::npos);
    CHECK(json.find("mean_percent") == std::string::npos);
}

TEST_CASE("assess: agent strategy requires a search backend") {
    auto mock = std::make_shared<MockModelBackend>();
    AssessOptions options = fixed_options();
    options.strategy = Strategy::Agent;
    CHECK_THROWS_AS(assess_document(extract_plaintext("X."), *mock, nullptr, options),
                    std::invalid_argument);
}

TEST_CASE("assess: concurrency 1 and 4 give byte-identical reports") {
    const SourceDocument doc = doc6();
    auto mock = doc6_backend();
    const std::string json1 = render_json(assess_document(doc, *mock, nullptr, fixed_options(1)));
    const std::string json4 = render_json(assess_document(doc, *mock, nullptr, fixed_options(4)));
    CHECK(json1 == json4);
}

TEST_CASE("report json: schema fields and false-part span mapping") {
    const Report report = assess_document(doc6(), *doc6_backend(), nullptr, fixed_options());
    const std::string json = render_json(report);
    const auto parsed = nlohmann::json::parse(json);
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed["kind"] == "plaintext");
    CHECK(parsed["strategy"] == "fewshot");
    CHECK(parsed["global"]["mean_percent"] == 63);
    CHECK(parsed["sentences"].size() == 6);
    // Span of a located false part equals the recorded range.
    const auto& second = parsed["sentences"][1];
    REQUIRE(second["verdict"].contains("false_part"));
    const auto span = second["verdict"]["false_part"]["span"];
    CHECK(span[0].get<std::size_t>() == second["marks"][0][0].get<std::size_t>());
    CHECK(span[1].get<std::size_t>() == second["marks"][0][1].get<std::size_t>());
}

TEST_CASE("report json: serialize-parse-serialize is byte-identical") {
    const Report report = assess_document(doc6(), *doc6_backend(), nullptr, fixed_options());
    const std::string once = render_json(report);
    const Report reparsed = report_from_json(once);
    CHECK(reparsed == report);
    CHECK(render_json(reparsed) == once);
}

TEST_CASE("report json round-trip equality on generated reports") {
    for (int iter = 0; iter < 300; ++iter) {
        Report report;
        report.origin = "origin-" + std::to_string(iter);
        report.kind = static_cast<DocKind>(testsup::rand_int(0, 3));
        report.strategy = testsup::rand_int(0, 1) ? Strategy::Agent : Strategy::FewShot;
        report.model_id = "model-x";
        report.created_at = "2026-01-01T00:00:00Z";
        const int n = testsup::rand_int(0, 6);
        std::size_t cp = 0;
        for (int i = 0; i < n; ++i) {
            Sentence s;
            s.index = static_cast<std::size_t>(i);
            s.text = "Sentence é " + std::to_string(i) + ".";
            s.range = {cp, cp + utf8::length(s.text)};
            cp = s.range.end + 1;
            report.sentences.push_back(s);
            const int roll = testsup::rand_int(0, 3);
            Verdict v;
            if (roll == 0) v = Verdict::non_verifiable();
            else if (roll == 1) v = Verdict::unable("because");
            else {
                v = Verdict::judged(testsup::rand_int(0, 100));
                if (testsup::rand_int(0, 1)) {
                    v.false_part = FalsePart{"Sentence", CharRange{0, 8}};
                    report.marks.push_back({CharRange{0, 8}});
                } else {
                    report.marks.push_back({});
                }
                v.reason = "reason " + std::to_string(i);
            }
            if (!v.is_judged()) report.marks.push_back({});
            report.verdicts.push_back({s.index, v});
            if (report.strategy == Strategy::Agent && v.is_judged()) {
                AgentTrace trace;
                trace.claim = s.text;
                trace.plan = {"q1", "q2"};
                trace.steps = {{"q1", "q1", {{"t", "https://u", "s"}}}};
                trace.final_raw = "Veracity score: 50% (Mostly True), False Part: /";
                trace.step_count = 1;
                report.agent_traces.emplace_back(std::move(trace));
            } else {
                report.agent_traces.emplace_back(std::nullopt);
            }
        }
        if (testsup::rand_int(0, 1)) {
            report.cues.push_back({0, 1000, {0, 4}});
            report.warnings.push_back("warn");
        }
        report.global = global_score(report.verdicts);
        const std::string json = render_json(report);
        const Report back = report_from_json(json);
        CHECK(back == report);
        CHECK(render_json(back) == json);
    }
}

TEST_CASE("html rendering: structural assertions on the six-sentence fixture") {
    const Report report = assess_document(doc6(), *doc6_backend(), nullptr, fixed_options());
    const std::string html = render_html(report);

    // One red-underline mark per located false part.
    std::size_t total_marks = 0;
    for (const auto& marks : report.marks) total_marks += marks.size();
    CHECK(total_marks == 4);
    CHECK(count_occurrences(html, "<mark class=\"fp\">") == total_marks);

    // Blue highlight iff score == 0: exactly one such sentence in the fixture.
    CHECK(count_occurrences(html, "<span class=\"s0\">") == 1);

    // Badge equals the global score output.
    CHECK(report.global.mean_percent == 63);
    CHECK(html.find("<div class=\"badge\">63%</div>") != std::string::npos);

    // Escaped HTML in sentence bodies.
    CHECK(html.find("&lt;b&gt;") != std::string::npos);
    CHECK(html.find("The <b> tag") == std::string::npos);

    // Muted class for the non-verifiable sentence; hatched bar for excluded.
    CHECK(count_occurrences(html, "class=\"text nv\"") == 1);
    CHECK(count_occurrences(html, "chart-bar excluded") == 1);

    // No scripts, no external resources.
    CHECK(html.find("<script") == std::string::npos);
    CHECK(html.find("http-equiv") == std::string::npos);
    CHECK(html.find("src=") == std::string::npos);
}

TEST_CASE("html rendering: sentence text reconstructs from the markup") {
    const Report report = assess_document(doc6(), *doc6_backend(), nullptr, fixed_options());
    const std::string html = render_html(report);
    std::string rebuilt;
    std::size_t pos = 0;
    while ((pos = html.find("<p class=\"text", pos)) != std::string::npos) {
        const std::size_t open = html.find('>', pos) + 1;
        const std::size_t close = html.find("</p>", open);
        rebuilt += unescape(strip_tags(html.substr(open, close - open)));
        rebuilt += "\n";
        pos = close;
    }
    std::string expected;
    for (const Sentence& s : report.sentences) expected += s.text + "\n";
    CHECK(rebuilt == expected);
}

TEST_CASE("html rendering: badge shows n/a with no judged sentences") {
    auto mock = std::make_shared<MockModelBackend>();
    mock->default_answer = "null";
    const Report report =
        assess_document(extract_plaintext("One. Two."), *mock, nullptr, fixed_options());
    const std::string html = render_html(report);
    CHECK(html.find("<div class=\"badge\">n/a</div>") != std::string::npos);
    CHECK(count_occurrences(html, "chart-bar excluded") == 2);
}

TEST_CASE("agent strategy: traces embedded in the report json") {
    auto model = make_demo_model_backend();
    auto search = make_demo_search_backend();
    AssessOptions options = fixed_options();
    options.strategy = Strategy::Agent;
    const SourceDocument doc =
        extract_plaintext("MoveOn.org says \"McCain opposes a woman's right to choose.\"");
    const Report report = assess_document(doc, *model, search.get(), options);
    REQUIRE(report.sentences.size() == 1);
    REQUIRE(report.agent_traces[0].has_value());
    const std::string json = render_json(report);
    CHECK(json.find("\"agent_trace\"") != std::string::npos);
    const Report back = report_from_json(json);
    CHECK(back.agent_traces[0] == report.agent_traces[0]);
}

TEST_CASE("verdict text formatting") {
    Verdict v = Verdict::judged(30, FalsePart{"did not keep", std::nullopt}, "Budgets rose.");
    const std::string text = format_verdict_text(v);
    CHECK(text.find("Veracity score: 30% (Mostly False)") != std::string::npos);
    CHECK(text.find("False part: did not keep") != std::string::npos);
    CHECK(text.find("Reason: Budgets rose.") != std::string::npos);
    CHECK(format_verdict_text(Verdict::non_verifiable()).find("Not verifiable") != std::string::npos);
    CHECK(format_verdict_text(Verdict::unable()).find("Unable to judge") != std::string::npos);
}
