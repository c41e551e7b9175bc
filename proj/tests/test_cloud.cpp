#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <thread>

#include "seccost/cloud.hpp"
#include "seccost/devices.hpp"

using namespace seccost;

namespace {

struct Fixture {
    TraceStore traces;
    SampleStore samples;
    std::shared_ptr<FakeResourceSource> source = std::make_shared<FakeResourceSource>();
    Tracer tracer{ComponentId{"iot-framework", {"127.0.0.1", 9100}}, artifact_taxonomy(),
                  source, traces, samples};
    Registry registry;
    Acl acl;

    Fixture() { acl.add({"C2", "temperature"}); }

    ServiceRegistration c1_temperature(uint16_t port = 9200) {
        return {"temperature", ComponentId{"C1", {"127.0.0.1", port}}, 1'700'000'000'000};
    }

    std::vector<std::string> task_names() const {
        std::vector<std::string> names;
        for (const auto& t : traces.snapshot()) names.push_back(t.task.name);
        return names;
    }
};

} // namespace

TEST_CASE("register then search finds the provider") {
    Fixture f;
    f.registry.register_service(f.c1_temperature());
    auto hit = f.registry.search("temperature");
    REQUIRE(hit.has_value());
    CHECK(hit->provider.name == "C1");
    CHECK(hit->provider.endpoint.port == 9200);
}

TEST_CASE("re-registration refreshes instead of duplicating") {
    Fixture f;
    auto reg = f.c1_temperature();
    f.registry.register_service(reg);
    reg.registered_at_utc_ms += 500;
    f.registry.register_service(reg);
    CHECK(f.registry.size() == 1);
    CHECK(f.registry.search("temperature")->registered_at_utc_ms == reg.registered_at_utc_ms);
}

TEST_CASE("searching an unknown service yields nothing") {
    Fixture f;
    f.registry.register_service(f.c1_temperature());
    CHECK(!f.registry.search("humidity").has_value());
}

TEST_CASE("registration validates the provider endpoint") {
    Fixture f;
    ServiceRegistration bad{"temperature", ComponentId{"C1", {"not-an-ip", 9200}}, 0};
    CHECK_THROWS_AS(f.registry.register_service(bad), std::invalid_argument);
    ServiceRegistration bad_port{"temperature", ComponentId{"C1", {"127.0.0.1", 0}}, 0};
    CHECK_THROWS_AS(f.registry.register_service(bad_port), std::invalid_argument);
}

TEST_CASE("registry search is deterministic under multiple providers") {
    Fixture f;
    f.registry.register_service(
        {"temperature", ComponentId{"C9", {"127.0.0.1", 9209}}, 1'700'000'000'000});
    f.registry.register_service(f.c1_temperature());
    auto first = f.registry.search("temperature");
    for (int i = 0; i < 5; ++i) {
        auto again = f.registry.search("temperature");
        REQUIRE(again.has_value());
        CHECK(again->provider.name == first->provider.name);
    }
    CHECK(first->provider.name == "C1"); // lowest provider name in key order
}

TEST_CASE("authorise reflects the acl and records one trace") {
    Fixture f;
    CHECK(authorise(f.acl, "C2", "temperature", f.tracer, InteractionId("i1")));
    CHECK(!authorise(f.acl, "C1", "temperature", f.tracer, InteractionId("i1")));
    Acl empty;
    CHECK(!authorise(empty, "C2", "temperature", f.tracer, InteractionId("i1")));
    auto names = f.task_names();
    CHECK(names == std::vector<std::string>{"authorise", "authorise", "authorise"});
    for (const auto& t : f.traces.snapshot())
        CHECK(t.task.category == TaskCategory::SecurityRelated);
}

TEST_CASE("orchestrate returns the provider endpoint when allowed") {
    Fixture f;
    f.registry.register_service(f.c1_temperature());
    auto result = orchestrate(f.registry, f.acl, "C2", "temperature", f.tracer,
                              InteractionId("i1"));
    CHECK(result.ok);
    CHECK(result.provider == Endpoint{"127.0.0.1", 9200});
    CHECK(f.task_names() == std::vector<std::string>{"authorise", "lookup"});
}

TEST_CASE("denied orchestration never consults the registry") {
    Fixture f;
    f.registry.register_service(f.c1_temperature());
    auto result = orchestrate(f.registry, f.acl, "C1", "temperature", f.tracer,
                              InteractionId("i1"));
    CHECK(!result.ok);
    CHECK(result.error == "not authorised");
    CHECK(f.task_names() == std::vector<std::string>{"authorise"}); // no lookup task
}

TEST_CASE("authorised but unregistered service reports no provider") {
    Fixture f;
    auto result = orchestrate(f.registry, f.acl, "C2", "temperature", f.tracer,
                              InteractionId("i1"));
    CHECK(!result.ok);
    CHECK(result.error == "no provider");
    CHECK(f.task_names() == std::vector<std::string>{"authorise", "lookup"});
}

TEST_CASE("authorise starts strictly before lookup") {
    Fixture f;
    f.registry.register_service(f.c1_temperature());
    orchestrate(f.registry, f.acl, "C2", "temperature", f.tracer, InteractionId("i1"));
    auto all = f.traces.snapshot();
    REQUIRE(all.size() == 2);
    CHECK(all[0].task.name == "authorise");
    CHECK(all[1].task.name == "lookup");
    CHECK(all[0].start_monotonic_ns < all[1].start_monotonic_ns);
}

TEST_CASE("payload helpers round-trip") {
    Endpoint ep{"127.0.0.1", 9200};
    auto [service, parsed] = parse_registration_payload(
        encode_registration_payload("temperature", ep));
    CHECK(service == "temperature");
    CHECK(parsed == ep);
    CHECK(parse_endpoint_payload(encode_endpoint_payload(ep)) == ep);
    CHECK_THROWS_AS(parse_registration_payload("temperature"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint_payload("127.0.0.1 99999"), std::invalid_argument);
}

namespace {

struct WireFixture : Fixture {
    CloudService service;

    WireFixture()
        : service(Endpoint{"127.0.0.1", 0}, insecure_channel(), registry, acl, tracer) {}

    Frame exchange(const Frame& request) {
        Socket client = connect_to(service.endpoint());
        send_frame_body(client, encode_frame_body(request));
        auto body = recv_frame_body(client);
        REQUIRE(body.has_value());
        return decode_frame_body(*body);
    }
};

} // namespace

TEST_CASE("wire REGISTER and ORCH_REQUEST round-trip through the service") {
    WireFixture f;
    Frame reg;
    reg.header = {"REGISTER", "i1", "C1", false};
    reg.payload = encode_registration_payload("temperature", {"127.0.0.1", 9200});
    CHECK(f.exchange(reg).header.message_type == "REGISTER_OK");

    Frame orch;
    orch.header = {"ORCH_REQUEST", "i1", "C2", false};
    orch.payload = "temperature";
    Frame response = f.exchange(orch);
    CHECK(response.header.message_type == "ORCH_RESPONSE");
    CHECK(parse_endpoint_payload(response.payload) == Endpoint{"127.0.0.1", 9200});
    f.service.stop();
}

TEST_CASE("wire ERROR paths: malformed endpoint, denial, unexpected type") {
    WireFixture f;
    Frame bad_reg;
    bad_reg.header = {"REGISTER", "i1", "C1", false};
    bad_reg.payload = "temperature not-an-endpoint";
    CHECK(f.exchange(bad_reg).header.message_type == "ERROR");

    Frame denied;
    denied.header = {"ORCH_REQUEST", "i1", "C9", false};
    denied.payload = "temperature";
    Frame response = f.exchange(denied);
    CHECK(response.header.message_type == "ERROR");
    CHECK(response.payload == "not authorised");

    Frame odd;
    odd.header = {"MEASURE_REQUEST", "i1", "C2", false};
    CHECK(f.exchange(odd).header.message_type == "ERROR");
    f.service.stop();
}

TEST_CASE("every inbound frame yields exactly one outbound frame") {
    WireFixture f;
    Socket client = connect_to(f.service.endpoint());
    for (int i = 0; i < 5; ++i) {
        Frame orch;
        orch.header = {"ORCH_REQUEST", "i1", "C2", false};
        orch.payload = "temperature";
        send_frame_body(client, encode_frame_body(orch));
        auto body = recv_frame_body(client);
        REQUIRE(body.has_value()); // one response per request, same connection
    }
    client.close();
    f.service.stop();
    CHECK(f.traces.size() == 5 * 2); // authorise + lookup per request
}
