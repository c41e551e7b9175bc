#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "seccost/tracer.hpp"

using namespace seccost;

namespace {

struct Fixture {
    std::shared_ptr<FakeResourceSource> source =
        std::make_shared<FakeResourceSource>(0.0, 32.0, 1'000'000, 10'000'000); // 10 ms steps
    TraceStore traces;
    SampleStore samples;
    Tracer tracer{ComponentId{"C1", {"127.0.0.1", 9001}}, artifact_taxonomy(), source, traces,
                  samples};
};

} // namespace

TEST_CASE("taxonomy categorizes the closed-loop tasks") {
    auto taxonomy = artifact_taxonomy();
    CHECK(taxonomy.category_of("encrypt") == TaskCategory::SecurityRelated);
    CHECK(taxonomy.category_of("measure-temperature") == TaskCategory::UseCaseRelated);
    CHECK(taxonomy.category_of("register") == TaskCategory::UseCaseRelated);
    CHECK(!taxonomy.contains("frobnicate"));
    auto security = taxonomy.security_related();
    CHECK(std::set<std::string>(security.begin(), security.end()) ==
          std::set<std::string>{"authorise", "handshake", "encrypt", "decrypt"});
}

TEST_CASE("begin_task resolves the category from the taxonomy") {
    Fixture f;
    auto token = f.tracer.begin_task(InteractionId("i1"), "encrypt");
    CHECK(token.kind().category == TaskCategory::SecurityRelated);
    auto token2 = f.tracer.begin_task(InteractionId("i1"), "measure-temperature");
    CHECK(token2.kind().category == TaskCategory::UseCaseRelated);
}

TEST_CASE("begin_task rejects names outside the taxonomy") {
    Fixture f;
    CHECK_THROWS_AS(f.tracer.begin_task(InteractionId("i1"), "frobnicate"),
                    std::invalid_argument);
    CHECK(f.traces.size() == 0);
}

TEST_CASE("end_task computes metrics and mirrors one sample per metric") {
    Fixture f;
    auto token = f.tracer.begin_task(InteractionId("i1"), "register");
    auto trace = f.tracer.end_task(token, 0);
    CHECK(trace.metrics.at(MetricId::M1) == 10.0); // fake source steps 10 ms
    CHECK(trace.metrics.at(MetricId::M2) == 0.0);
    CHECK(trace.metrics.at(MetricId::M3) == 0.0);
    CHECK(trace.metrics.at(MetricId::M4) == 0.0);
    CHECK(f.traces.size() == 1);
    CHECK(f.samples.size() == 4);
    for (const auto& s : f.samples.snapshot()) {
        CHECK(s.interaction == InteractionId("i1"));
        CHECK(s.component.name == "C1");
        CHECK(s.task.name == "register");
    }
}

TEST_CASE("double end is rejected") {
    Fixture f;
    auto token = f.tracer.begin_task(InteractionId("i1"), "register");
    f.tracer.end_task(token, 0);
    CHECK_THROWS_AS(f.tracer.end_task(token, 0), std::runtime_error);
    CHECK(f.traces.size() == 1);
}

TEST_CASE("sequential tasks do not overlap in monotonic time") {
    Fixture f;
    auto t1 = f.tracer.begin_task(InteractionId("i1"), "register");
    auto trace1 = f.tracer.end_task(t1, 0);
    auto t2 = f.tracer.begin_task(InteractionId("i1"), "discover");
    auto trace2 = f.tracer.end_task(t2, 0);
    CHECK(trace1.end_monotonic_ns > trace1.start_monotonic_ns);
    CHECK(trace2.start_monotonic_ns >= trace1.end_monotonic_ns);
}

TEST_CASE("seven tasks yield 28 cost samples") {
    Fixture f;
    const char* tasks[] = {"register",       "discover",           "authorise",    "lookup",
                           "request-temperature", "measure-temperature", "decide-actuate"};
    for (const char* name : tasks) {
        auto token = f.tracer.begin_task(InteractionId("i1"), name);
        f.tracer.end_task(token, 0);
    }
    CHECK(f.traces.size() == 7);
    CHECK(f.samples.size() == 28);
}

TEST_CASE("wire bytes flow into M4") {
    Fixture f;
    auto token = f.tracer.begin_task(InteractionId("i1"), "request-temperature");
    auto trace = f.tracer.end_task(token, 2048);
    CHECK(trace.wire_bytes == 2048);
    CHECK(trace.metrics.at(MetricId::M4) == 2.0);
}

TEST_CASE("security_tasks filters and orders by start") {
    Fixture f;
    auto a = f.tracer.begin_task(InteractionId("i1"), "handshake");
    f.tracer.end_task(a, 0);
    auto b = f.tracer.begin_task(InteractionId("i1"), "measure-temperature");
    f.tracer.end_task(b, 0);
    auto c = f.tracer.begin_task(InteractionId("i1"), "encrypt");
    f.tracer.end_task(c, 28);
    auto d = f.tracer.begin_task(InteractionId("i2"), "decrypt");
    f.tracer.end_task(d, 0);

    auto security = security_tasks(f.traces, InteractionId("i1"));
    REQUIRE(security.size() == 2);
    CHECK(security[0].task.name == "handshake");
    CHECK(security[1].task.name == "encrypt");
    for (const auto& t : security) CHECK(t.task.category == TaskCategory::SecurityRelated);
}

TEST_CASE("security_tasks of an unknown interaction is empty") {
    Fixture f;
    CHECK(security_tasks(f.traces, InteractionId("nope")).empty());
}

TEST_CASE("category partition covers all tasks disjointly") {
    Fixture f;
    const char* names[] = {"handshake", "register", "encrypt", "lookup", "decrypt", "authorise"};
    for (const char* name : names) {
        auto token = f.tracer.begin_task(InteractionId("i1"), name);
        f.tracer.end_task(token, 0);
    }
    auto all = f.traces.snapshot();
    auto security = security_tasks(f.traces, InteractionId("i1"));
    size_t use_case = 0;
    for (const auto& t : all)
        if (t.task.category == TaskCategory::UseCaseRelated) ++use_case;
    CHECK(security.size() + use_case == all.size());
}

TEST_CASE("per-component trace order is monotone in start time") {
    Fixture f;
    for (int i = 0; i < 10; ++i) {
        auto token = f.tracer.begin_task(InteractionId("i1"), "encrypt");
        f.tracer.end_task(token, 0);
    }
    auto all = f.traces.snapshot();
    for (size_t i = 1; i < all.size(); ++i)
        CHECK(all[i].start_monotonic_ns >= all[i - 1].start_monotonic_ns);
}

TEST_CASE("every trace mirrors samples with identical coordinates") {
    Fixture f;
    auto token = f.tracer.begin_task(InteractionId("i9"), "decide-actuate");
    auto trace = f.tracer.end_task(token, 0);
    auto samples = f.samples.snapshot();
    REQUIRE(samples.size() == trace.metrics.size());
    std::set<MetricId> seen;
    for (const auto& s : samples) {
        CHECK(s.interaction == trace.interaction);
        CHECK(s.component == trace.component);
        CHECK(s.task == trace.task);
        CHECK(s.t_utc_ms == trace.start_wall_utc_ms);
        CHECK(s.value == trace.metrics.at(s.metric));
        seen.insert(s.metric);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("trace file round-trip") {
    Fixture f;
    for (int i = 0; i < 5; ++i) {
        auto token = f.tracer.begin_task(InteractionId("i1"), i % 2 ? "encrypt" : "register");
        f.tracer.end_task(token, 100 * i);
    }
    auto path = std::filesystem::temp_directory_path() / "seccost_trace_roundtrip.tsv";
    f.traces.save(path.string());
    TraceStore loaded = TraceStore::load(path.string());
    REQUIRE(loaded.size() == f.traces.size());
    auto a = f.traces.snapshot();
    auto b = loaded.snapshot();
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i].task == a[i].task);
        CHECK(b[i].component == a[i].component);
        CHECK(b[i].interaction == a[i].interaction);
        CHECK(b[i].start_monotonic_ns == a[i].start_monotonic_ns);
        CHECK(b[i].end_monotonic_ns == a[i].end_monotonic_ns);
        CHECK(b[i].start_wall_utc_ms == a[i].start_wall_utc_ms);
        CHECK(b[i].metrics == a[i].metrics);
        CHECK(b[i].wire_bytes == a[i].wire_bytes);
    }
    std::filesystem::remove(path);
}
