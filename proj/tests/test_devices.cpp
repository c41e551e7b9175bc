#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <thread>

#include "seccost/devices.hpp"
#include "seccost/monitor.hpp"
#include "seccost/timeutil.hpp"

using namespace seccost;

namespace {

std::vector<uint8_t> test_psk() { return std::vector<uint8_t>(kPskBytes, 0x42); }

// Independent replay of the room recurrence, including the noise stream.
class RoomOracle {
public:
    RoomOracle(double temperature, double gain, double cooling, uint64_t seed)
        : temperature_(temperature), gain_(gain), cooling_(cooling), rng_(seed) {}

    double tick(bool ac_on) {
        double unit = static_cast<double>(rng_()) / 18446744073709551616.0;
        double noise = -0.05 + 0.1 * unit;
        temperature_ += gain_ - (ac_on ? cooling_ : 0.0) + noise;
        return temperature_;
    }

private:
    double temperature_;
    double gain_;
    double cooling_;
    std::mt19937_64 rng_;
};

struct Stores {
    TraceStore traces;
    SampleStore samples;
    std::shared_ptr<FakeResourceSource> source = std::make_shared<FakeResourceSource>();

    Tracer tracer(const std::string& name, uint16_t port) {
        return Tracer(ComponentId{name, {"127.0.0.1", port}}, artifact_taxonomy(), source,
                      traces, samples);
    }

    size_t count_task(const std::string& name) const {
        size_t n = 0;
        for (const auto& t : traces.snapshot())
            if (t.task.name == name) ++n;
        return n;
    }
};

// Cloud + sensor stack on loopback; the controller under test talks to it.
struct Stack {
    Stores cloud_stores, c1_stores, c2_stores;
    Registry registry;
    Acl acl;
    RoomModel room;
    Tracer cloud_tracer, c1_tracer, c2_tracer;
    CloudService cloud;
    SensorService c1;

    explicit Stack(const ChannelConfig& chan, double temp = 30.0, double gain = 0.2,
                   double cooling = 1.0, uint64_t seed = 99)
        : room(temp, gain, cooling, seed),
          cloud_tracer(cloud_stores.tracer("iot-framework", 9100)),
          c1_tracer(c1_stores.tracer("C1", 9200)), c2_tracer(c2_stores.tracer("C2", 65001)),
          cloud(Endpoint{"127.0.0.1", 0}, chan, registry, make_acl(), cloud_tracer),
          c1(Endpoint{"127.0.0.1", 0}, chan, room, c1_tracer) {}

    static Acl make_acl() {
        Acl acl;
        acl.add({"C2", "temperature"});
        return acl;
    }

    void register_c1(const ChannelConfig&, const InteractionId& interaction) {
        c1.register_with_cloud(cloud.endpoint(), interaction, c1.endpoint());
    }
};

} // namespace

TEST_CASE("room model reproduces the seeded recurrence exactly") {
    RoomModel room(30.0, 0.2, 1.0, 1234);
    RoomOracle oracle(30.0, 0.2, 1.0, 1234);
    for (int i = 0; i < 100; ++i) {
        bool ac = i % 3 == 0;
        room.set_ac(ac);
        room.tick();
        CHECK(room.temperature_c() == oracle.tick(ac));
    }
}

TEST_CASE("room noise stays within its amplitude") {
    RoomModel room(20.0, 1e-12, 1e-12, 777); // negligible drift isolates the noise term
    double prev = room.temperature_c();
    for (int i = 0; i < 1000; ++i) {
        room.tick();
        double delta = room.temperature_c() - prev;
        CHECK(delta >= -0.051);
        CHECK(delta <= 0.051);
        prev = room.temperature_c();
    }
}

TEST_CASE("room reset restores the seeded sequence") {
    RoomModel room(25.0, 0.3, 0.8, 42);
    std::vector<double> first;
    for (int i = 0; i < 20; ++i) {
        room.tick();
        first.push_back(room.temperature_c());
    }
    room.reset(25.0, 42);
    for (int i = 0; i < 20; ++i) {
        room.tick();
        CHECK(room.temperature_c() == first[i]);
    }
}

TEST_CASE("controller policy validation") {
    ControllerPolicy p;
    CHECK_NOTHROW(p.validate());
    p.loop_iterations = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("temperature formatting uses one fractional digit") {
    CHECK(format_temperature(25.0) == "25.0");
    CHECK(format_temperature(25.34) == "25.3");
    CHECK(format_temperature(-3.25) == "-3.2");
}

TEST_CASE("sensor answers k requests with k measure traces") {
    Stack stack{insecure_channel()};
    InteractionId interaction("i1");
    Stores client;
    Tracer tracer = client.tracer("C2", 65001);
    auto chan = ClientChannel::open(insecure_channel(), stack.c1.endpoint(), tracer,
                                    interaction, "C2");
    for (int i = 0; i < 7; ++i) {
        Frame f;
        f.header.message_type = "MEASURE_REQUEST";
        auto result = traced_exchange(chan, tracer, interaction, "request-temperature", f);
        CHECK(result.response.header.message_type == "MEASURE_RESPONSE");
        CHECK(parse_double(result.response.payload) > 0.0);
    }
    chan.close();
    stack.c1.stop();
    CHECK(stack.c1_stores.count_task("measure-temperature") == 7);
    CHECK(client.count_task("request-temperature") == 7);
}

TEST_CASE("sensor reading tracks the room within noise and rounding") {
    Stack stack{insecure_channel(), 20.0, 1e-9, 1.0, 5};
    Stores client;
    Tracer tracer = client.tracer("C2", 65001);
    auto chan = ClientChannel::open(insecure_channel(), stack.c1.endpoint(), tracer,
                                    InteractionId("i1"), "C2");
    Frame f;
    f.header.message_type = "MEASURE_REQUEST";
    auto result = traced_exchange(chan, tracer, InteractionId("i1"), "request-temperature", f);
    double reading = parse_double(result.response.payload);
    CHECK(std::abs(reading - 20.0) <= 0.1 + 1e-9); // one tick of noise plus formatting
    chan.close();
}

TEST_CASE("malformed request draws an ERROR frame") {
    Stack stack{insecure_channel()};
    Stores client;
    Tracer tracer = client.tracer("C2", 65001);
    auto chan = ClientChannel::open(insecure_channel(), stack.c1.endpoint(), tracer,
                                    InteractionId("i1"), "C2");
    Frame f;
    f.header.message_type = "ORCH_REQUEST"; // sensor does not orchestrate
    f.payload = "temperature";
    chan.send_wire(chan.prepare(f));
    auto body = chan.recv_body();
    REQUIRE(body.has_value());
    CHECK(chan.open_body(*body).header.message_type == "ERROR");
    chan.close();
}

TEST_CASE("measure request on an unopened secure channel is refused") {
    Stack stack{secure_channel(test_psk())};
    Stores client;
    Tracer tracer = client.tracer("C2", 65001);
    auto chan = ClientChannel::open(insecure_channel(), stack.c1.endpoint(), tracer,
                                    InteractionId("i1"), "C2");
    Frame f;
    f.header.message_type = "MEASURE_REQUEST";
    chan.send_wire(chan.prepare(f));
    auto body = chan.recv_body();
    REQUIRE(body.has_value());
    Frame response = chan.open_body(*body);
    CHECK(response.header.message_type == "ERROR");
    CHECK(response.payload == "secure channel required");
    chan.close();
}

TEST_CASE("controller keeps the AC off below the threshold") {
    // Room pinned well below 25 and effectively static.
    Stack stack{insecure_channel(), 18.0, 1e-9, 1.0, 7};
    InteractionId interaction("i1");
    stack.register_c1(insecure_channel(), interaction);
    ControllerPolicy policy{25.0, 10, 0};
    auto outcome = run_controller(stack.cloud.endpoint(), policy, insecure_channel(),
                                  stack.c2_tracer, interaction, stack.room);
    REQUIRE(outcome.ok);
    REQUIRE(outcome.readings.size() == 10);
    for (const auto& r : outcome.readings) {
        CHECK(r.temperature_c < 25.0);
        CHECK(!r.ac_activated);
    }
    CHECK(!stack.room.ac_on());
}

TEST_CASE("a reading above the threshold activates the AC that tick") {
    Stack stack{insecure_channel(), 26.0, 1e-9, 1.0, 7};
    InteractionId interaction("i1");
    stack.register_c1(insecure_channel(), interaction);
    ControllerPolicy policy{25.0, 1, 0};
    auto outcome = run_controller(stack.cloud.endpoint(), policy, insecure_channel(),
                                  stack.c2_tracer, interaction, stack.room);
    REQUIRE(outcome.ok);
    REQUIRE(outcome.readings.size() == 1);
    CHECK(outcome.readings[0].temperature_c > 25.0);
    CHECK(outcome.readings[0].ac_activated);
    CHECK(stack.room.ac_on());
}

TEST_CASE("hot room cools strictly while the AC is on, matching the oracle") {
    constexpr uint64_t kSeed = 424242;
    Stack stack{insecure_channel(), 30.0, 0.2, 1.0, kSeed};
    InteractionId interaction("i1");
    stack.register_c1(insecure_channel(), interaction);
    ControllerPolicy policy{25.0, 20, 0};
    auto outcome = run_controller(stack.cloud.endpoint(), policy, insecure_channel(),
                                  stack.c2_tracer, interaction, stack.room);
    REQUIRE(outcome.ok);
    REQUIRE(outcome.readings.size() == 20);

    // Oracle: reading i is the room after tick i, where the AC state during
    // tick i is the decision taken after reading i-1.
    RoomOracle oracle(30.0, 0.2, 1.0, kSeed);
    bool ac = false;
    for (const auto& r : outcome.readings) {
        double expected = oracle.tick(ac);
        CHECK(parse_double(format_temperature(expected)) == r.temperature_c);
        ac = expected > 25.0;
        CHECK(r.ac_activated == ac);
    }

    for (size_t i = 1; i < outcome.readings.size(); ++i)
        if (outcome.readings[i - 1].ac_activated && outcome.readings[i].ac_activated)
            CHECK(outcome.readings[i].temperature_c < outcome.readings[i - 1].temperature_c);
}

TEST_CASE("closed loop is bit-identical across reruns with one seed") {
    auto run_once = [](uint64_t seed) {
        Stack stack{insecure_channel(), 28.0, 0.3, 0.9, seed};
        InteractionId interaction("i1");
        stack.register_c1(insecure_channel(), interaction);
        ControllerPolicy policy{25.0, 15, 0};
        auto outcome = run_controller(stack.cloud.endpoint(), policy, insecure_channel(),
                                      stack.c2_tracer, interaction, stack.room);
        REQUIRE(outcome.ok);
        return outcome.readings;
    };
    auto a = run_once(31337);
    auto b = run_once(31337);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].temperature_c == b[i].temperature_c);
        CHECK(a[i].ac_activated == b[i].ac_activated);
    }
}

TEST_CASE("unauthorised controller aborts before the measure loop") {
    Stores cloud_stores, c2_stores;
    Registry registry;
    Acl acl; // empty: nobody is authorised
    Tracer cloud_tracer = cloud_stores.tracer("iot-framework", 9100);
    CloudService cloud(Endpoint{"127.0.0.1", 0}, insecure_channel(), registry, acl,
                       cloud_tracer);
    RoomModel room(30.0, 0.2, 1.0, 1);
    Tracer c2_tracer = c2_stores.tracer("C2", 65001);
    ControllerPolicy policy{25.0, 5, 0};
    auto outcome = run_controller(cloud.endpoint(), policy, insecure_channel(), c2_tracer,
                                  InteractionId("i1"), room);
    CHECK(!outcome.ok);
    CHECK(outcome.readings.empty());
    CHECK(outcome.error.find("not authorised") != std::string::npos);
    CHECK(c2_stores.count_task("discover") == 1); // the discovery attempt is retained
    CHECK(c2_stores.count_task("request-temperature") == 0);
    cloud.stop();
}

TEST_CASE("secure run emits the full security-trace dichotomy") {
    Stack stack{secure_channel(test_psk())};
    InteractionId interaction("i1");
    stack.c1.register_with_cloud(stack.cloud.endpoint(), interaction, stack.c1.endpoint());
    ControllerPolicy policy{25.0, 10, 0};
    auto outcome = run_controller(stack.cloud.endpoint(), policy, secure_channel(test_psk()),
                                  stack.c2_tracer, interaction, stack.room);
    REQUIRE(outcome.ok);

    auto count_all = [&](const std::string& name) {
        return stack.cloud_stores.count_task(name) + stack.c1_stores.count_task(name) +
               stack.c2_stores.count_task(name);
    };
    // Three channel opens (C1->cloud, C2->cloud, C2->C1), two sides each.
    CHECK(count_all("handshake") == 6);
    // 24 payload frames per run: REGISTER/OK + ORCH pair + 10 measure pairs.
    CHECK(count_all("encrypt") == 24);
    CHECK(count_all("decrypt") == 24);

    for (const auto& t : stack.c2_stores.traces.snapshot())
        if (t.task.name == "encrypt") CHECK(t.wire_bytes == kAeadOverheadBytes);
}

TEST_CASE("insecure run emits security traces only for authorisation") {
    Stack stack{insecure_channel()};
    InteractionId interaction("i1");
    stack.register_c1(insecure_channel(), interaction);
    ControllerPolicy policy{25.0, 10, 0};
    auto outcome = run_controller(stack.cloud.endpoint(), policy, insecure_channel(),
                                  stack.c2_tracer, interaction, stack.room);
    REQUIRE(outcome.ok);
    std::vector<TaskTrace> all;
    for (const auto* stores :
         {&stack.cloud_stores, &stack.c1_stores, &stack.c2_stores})
        for (const auto& t : stores->traces.snapshot())
            if (t.task.category == TaskCategory::SecurityRelated) all.push_back(t);
    REQUIRE(all.size() == 1);
    CHECK(all[0].task.name == "authorise");
}

TEST_CASE("secure wire frames exceed insecure ones by exactly the AEAD overhead") {
    auto frame_sizes = [](const ChannelConfig& chan, uint64_t seed) {
        RecordStore records;
        Stack stack{chan, 30.0, 0.2, 1.0, seed};
        Proxy c1_proxy({{"127.0.0.1", 0}, stack.c1.endpoint(), "C1"}, records);
        InteractionId interaction("i1");
        // Advertise the proxy endpoint so the measure loop is monitored.
        stack.c1.register_with_cloud(stack.cloud.endpoint(), interaction,
                                     c1_proxy.listen_endpoint());
        stack.room.reset(30.0, seed);
        ControllerPolicy policy{25.0, 5, 0};
        auto outcome = run_controller(stack.cloud.endpoint(), policy, chan, stack.c2_tracer,
                                      interaction, stack.room);
        REQUIRE(outcome.ok);
        c1_proxy.stop();
        std::vector<uint64_t> sizes;
        for (const auto& r : records.snapshot())
            if (r.message_type == "MEASURE_REQUEST" || r.message_type == "MEASURE_RESPONSE")
                sizes.push_back(r.byte_count);
        return sizes;
    };

    auto secure_sizes = frame_sizes(secure_channel(test_psk()), 333);
    auto insecure_sizes = frame_sizes(insecure_channel(), 333);
    REQUIRE(secure_sizes.size() == insecure_sizes.size());
    for (size_t i = 0; i < secure_sizes.size(); ++i)
        CHECK(secure_sizes[i] == insecure_sizes[i] + kAeadOverheadBytes);
}
