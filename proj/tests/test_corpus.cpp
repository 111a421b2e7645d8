#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <newsrank/corpus.hpp>
#include <newsrank/tokenizer.hpp>

using namespace newsrank;

namespace {

std::string fixture(const char* name) { return std::string(FIXTURE_DIR "/") + name; }

std::string write_temp(const std::string& name, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "newsrank_corpus";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

Question tf_question(const std::string& id = "q", const std::string& ans = "yes") {
  Question q;
  q.id = id;
  q.text = "Will it happen?";
  q.qtype = QType::TF;
  q.choices = {"yes", "no"};
  q.start_date = Date::parse("2021-01-01");
  q.expiry_date = Date::parse("2021-12-31");
  q.answer_text = ans;
  return q;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Hurricane Dorian, 2019!") ==
        std::vector<std::string>{"hurricane", "dorian", "2019"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("COVID-19") == std::vector<std::string>{"covid", "19"});
  CHECK(tokenize("  \t\n ") == std::vector<std::string>{});
  CHECK(tokenize("a.b..c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(token_count("one two three") == 3);
}

TEST_CASE("date parsing") {
  CHECK(Date::parse("2021-03-04").str() == "2021-03-04");
  // ISO timestamps reduce to the calendar day.
  CHECK(Date::parse("2019-08-01T12:30:00Z").str() == "2019-08-01");
  CHECK_FALSE(Date::try_parse("2021-02-30").has_value());
  CHECK_FALSE(Date::try_parse("2021-13-01").has_value());
  CHECK_FALSE(Date::try_parse("not a date").has_value());
  CHECK_FALSE(Date::try_parse("2021/03/04").has_value());
  CHECK_THROWS_AS(Date::parse("2021-02-30"), DataError);

  Date a = Date::parse("2020-02-28");
  CHECK(a.plus_days(1).str() == "2020-02-29");  // leap year
  CHECK(a.days_until(Date::parse("2020-03-01")) == 2);
  CHECK(Date::parse("2021-01-02") > Date::parse("2021-01-01"));
}

TEST_CASE("normalize_time maps dates into the question window") {
  Question q = tf_question();
  // 364-day span; 2021-07-02 sits exactly half way.
  CHECK(normalize_time(q, Date::parse("2021-01-01")) == 0.0);
  CHECK(normalize_time(q, Date::parse("2021-12-31")) == 1.0);
  CHECK(normalize_time(q, Date::parse("2021-07-02")) == 0.5);
  SECTION("out-of-window dates clamp") {
    CHECK(normalize_time(q, Date::parse("2020-06-01")) == 0.0);
    CHECK(normalize_time(q, Date::parse("2022-06-01")) == 1.0);
  }
  SECTION("degenerate window maps everything to zero") {
    q.expiry_date = q.start_date;
    CHECK(normalize_time(q, Date::parse("2021-06-01")) == 0.0);
  }
}

TEST_CASE("prior is one over the number of choices") {
  Question q = tf_question();
  CHECK(q.prior() == 0.5);
  q.qtype = QType::MCQ;
  q.choices = {"a", "b", "c", "d"};
  CHECK(q.prior() == 0.25);
  q.qtype = QType::NUM;
  q.choices.clear();
  CHECK(q.prior() == 0.5);
}

TEST_CASE("question invariants") {
  CHECK_FALSE(check_question(tf_question()).has_value());

  SECTION("inverted window") {
    Question q = tf_question();
    std::swap(q.start_date, q.expiry_date);
    CHECK(check_question(q) == "inverted window");
  }
  SECTION("TF ground truth must be yes or no") {
    Question q = tf_question("q", "maybe");
    CHECK(check_question(q) == "ground truth not in choices");
  }
  SECTION("MCQ answer outside choice list") {
    Question q = tf_question();
    q.qtype = QType::MCQ;
    q.choices = {"red", "blue"};
    q.answer_text = "green";
    CHECK(check_question(q) == "ground truth not in choices");
  }
  SECTION("NUM target range") {
    Question q = tf_question();
    q.qtype = QType::NUM;
    q.choices.clear();
    q.answer_text.clear();
    q.answer_value = 1.2;
    CHECK(check_question(q) == "NUM ground truth outside [0,1]");
  }
  SECTION("crowd series must be strictly increasing in time") {
    Question q = tf_question();
    q.crowd_series = {{Date::parse("2021-03-01"), 0.5}, {Date::parse("2021-03-01"), 0.6}};
    CHECK(check_question(q) == "crowd series not strictly increasing");
  }
  SECTION("crowd probabilities stay in [0,1]") {
    Question q = tf_question();
    q.crowd_series = {{Date::parse("2021-03-01"), 1.5}};
    CHECK(check_question(q) == "crowd prob_correct outside [0,1]");
  }
}

TEST_CASE("malformed input lines are rejected with their line number") {
  auto path = write_temp("bad_questions.jsonl",
                         R"({"id":"a","question":"x?","qtype":"t/f","begin_date":"2021-01-01","expiry_date":"2021-02-01","answer":"yes"})"
                         "\n"
                         "this is not json\n"
                         "\n"  // blank lines are fine
                         R"({"id":"b","question":"y?","qtype":"t/f","begin_date":"2021-02-01","expiry_date":"2021-01-01","answer":"no"})"
                         "\n"
                         R"({"id":"a","question":"dup","qtype":"t/f","begin_date":"2021-01-01","expiry_date":"2021-02-01","answer":"yes"})"
                         "\n");
  LoadReport report;
  QuestionSet qs = load_questions(path, report);
  CHECK(qs.size() == 1);
  REQUIRE(report.rejects.size() == 3);
  CHECK(report.rejects[0].line == 2);
  CHECK(report.rejects[0].reason == "malformed JSON");
  CHECK(report.rejects[1].line == 4);
  CHECK(report.rejects[1].reason == "inverted window");
  CHECK(report.rejects[2].line == 5);
  CHECK(report.rejects[2].reason == "duplicate id");
}

TEST_CASE("article loader") {
  auto path = write_temp("articles_edge.jsonl",
                         R"({"_meta":{"fingerprint":"x"}})"
                         "\n"
                         R"({"id":"n1","title":"T","text":"Body.","date":"2021-01-05"})"
                         "\n"
                         R"({"id":"n2","title":"","text":"","date":"2021-01-06"})"
                         "\n"
                         R"({"id":"n3","title":"U","text":"B.","date":"2021-99-01"})"
                         "\n");
  LoadReport report;
  ArticleStore store = load_articles(path, report);
  CHECK(store.size() == 1);  // meta skipped, n2 empty, n3 bad date
  REQUIRE(report.rejects.size() == 2);
  CHECK(report.rejects[0].reason == "title and body both empty");
  CHECK(report.rejects[1].reason == "invalid date: 2021-99-01");
  CHECK(store.find("n1")->body == "Body.");

  SECTION("duplicate article ids throw on direct insertion") {
    ArticleStore s2;
    NewsArticle a{"n1", "T", "B", Date::parse("2021-01-01"), ""};
    s2.add(a);
    CHECK_THROWS_WITH(s2.add(a), "duplicate id: n1");
  }
}

TEST_CASE("fixture dataset loads cleanly") {
  auto res = load_dataset(fixture("questions.jsonl"), fixture("articles.jsonl"),
                          fixture("forecasts.jsonl"));
  CHECK(res.report.rejects.empty());
  CHECK(res.questions.size() == 12);
  CHECK(res.articles.size() == 60);

  SECTION("forecast series attach to their questions") {
    const Question* q1 = res.questions.find("q01");
    REQUIRE(q1 != nullptr);
    REQUIRE(q1->crowd_series.size() == 3);
    CHECK(q1->crowd_series[0].timestamp.str() == "2019-08-01");
    CHECK(q1->crowd_series[0].prob_correct == 0.55);
    CHECK(q1->crowd_series[2].prob_correct == 0.9);
  }
  SECTION("inline series survive when the forecast file has no entry") {
    const Question* q10 = res.questions.find("q10");
    REQUIRE(q10 != nullptr);
    CHECK(q10->crowd_series.size() == 3);
    CHECK_FALSE(q10->crowd_missing);
  }
  SECTION("questions with no series anywhere are flagged") {
    const Question* q12 = res.questions.find("q12");
    REQUIRE(q12 != nullptr);
    CHECK(q12->crowd_missing);
    REQUIRE(res.report.flags.size() == 1);
    CHECK(res.report.flags[0].find("q12") != std::string::npos);
  }
}

TEST_CASE("canonical serialization round-trips") {
  auto res = load_dataset(fixture("questions.jsonl"), fixture("articles.jsonl"),
                          fixture("forecasts.jsonl"));
  for (const auto& q : res.questions) {
    Question back = detail::question_from_json(question_to_json(q));
    CHECK(back == q);
  }
  for (const auto& a : res.articles) {
    NewsArticle back = detail::article_from_json(article_to_json(a));
    CHECK(back == a);
  }
}

TEST_CASE("train/test split counts by expiry against the cut-off") {
  auto res = load_dataset(fixture("questions.jsonl"), fixture("articles.jsonl"),
                          fixture("forecasts.jsonl"));
  ValidationReport rep = validate_dataset(res.questions, Date::parse("2021-07-01"));
  CHECK(rep.total() == 12);
  CHECK(rep.tf_count == 6);
  CHECK(rep.mcq_count == 3);
  CHECK(rep.num_count == 3);
  CHECK(rep.tf_train == 4);
  CHECK(rep.tf_test == 2);
  CHECK(rep.mcq_train == 2);
  CHECK(rep.mcq_test == 1);
  CHECK(rep.num_train == 3);
  CHECK(rep.num_test == 0);
  CHECK(rep.violations.empty());

  SECTION("expiry exactly on the cut-off is test, strictly before is train") {
    Question q = tf_question("edge");
    q.expiry_date = Date::parse("2021-07-01");
    CHECK_FALSE(is_train(q, Date::parse("2021-07-01")));
    q.expiry_date = Date::parse("2021-06-30");
    CHECK(is_train(q, Date::parse("2021-07-01")));
  }
}

TEST_CASE("published-layout conversion") {
  SECTION("true/false with scalar yes-forecasts") {
    json obj = {{"id", "G1"},
                {"question", "Will X?"},
                {"qtype", "t/f"},
                {"publish_time", "2020-01-01T00:00:00Z"},
                {"close_time", "2020-06-01T00:00:00Z"},
                {"answer", "No"},
                {"crowd", json::array({
                             {{"timestamp", "2020-02-01T08:00:00Z"}, {"forecast", 0.3}},
                             {{"timestamp", "2020-02-01T19:00:00Z"}, {"forecast", 0.4}},
                             {{"timestamp", "2020-03-01T00:00:00Z"}, {"forecast", 0.25}},
                         })}};
    Question q = detail::question_from_autocast(obj);
    CHECK(q.qtype == QType::TF);
    CHECK(q.choices == std::vector<std::string>{"yes", "no"});
    CHECK(q.answer_text == "no");
    // Same-day entries collapse to the last one; answer "no" flips the mass.
    REQUIRE(q.crowd_series.size() == 2);
    CHECK(q.crowd_series[0].timestamp.str() == "2020-02-01");
    CHECK(q.crowd_series[0].prob_correct == Catch::Approx(0.6).margin(1e-12));
    CHECK(q.crowd_series[1].prob_correct == 0.75);
  }

  SECTION("multiple choice with letter answers and partial distributions") {
    json obj = {{"id", "G2"},
                {"question", "Which?"},
                {"qtype", "mc"},
                {"publish_time", "2020-01-01"},
                {"close_time", "2020-06-01"},
                {"choices", json::array({"alpha", "beta", "gamma"})},
                {"answer", "B"},
                {"crowd", json::array({
                             {{"timestamp", "2020-02-01"},
                              {"forecast", json::array({0.2, 0.5, 0.3})}},
                             {{"timestamp", "2020-03-01"},
                              {"forecast", json::array({0.9})}},  // beta absent
                         })}};
    Question q = detail::question_from_autocast(obj);
    CHECK(q.answer_text == "beta");
    REQUIRE(q.crowd_series.size() == 2);
    CHECK(q.crowd_series[0].prob_correct == 0.5);
    CHECK(q.crowd_series[1].prob_correct == 0.0);  // missing choice carries no mass
  }

  SECTION("numerical forecasts score by closeness to the outcome") {
    json obj = {{"id", "G3"},
                {"question", "How much?"},
                {"qtype", "num"},
                {"publish_time", "2020-01-01"},
                {"close_time", "2020-06-01"},
                {"answer", "0.8"},
                {"crowd", json::array({
                             {{"timestamp", "2020-02-01"}, {"forecast", 0.6}},
                         })}};
    Question q = detail::question_from_autocast(obj);
    CHECK(q.answer_value == 0.8);
    REQUIRE(q.crowd_series.size() == 1);
    CHECK(q.crowd_series[0].prob_correct == Catch::Approx(0.8).margin(1e-12));
  }

  SECTION("a JSON array file converts record by record") {
    json arr = json::array();
    arr.push_back({{"id", "A1"},
                   {"question", "Q?"},
                   {"qtype", "t/f"},
                   {"publish_time", "2020-01-01"},
                   {"close_time", "2020-02-01"},
                   {"answer", "yes"}});
    arr.push_back({{"id", "A2"},
                   {"question", "Q?"},
                   {"qtype", "mc"},
                   {"publish_time", "2020-01-01"},
                   {"close_time", "2020-02-01"},
                   {"choices", json::array({"x", "y"})},
                   {"answer", "Z"}});  // unconvertible
    auto path = write_temp("autocast_mini.json", arr.dump());
    LoadReport report;
    QuestionSet qs = load_autocast_questions(path, report);
    CHECK(qs.size() == 1);
    REQUIRE(report.rejects.size() == 1);
    CHECK(report.rejects[0].reason == "ground truth not in choices");
  }
}
