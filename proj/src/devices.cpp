#include "seccost/devices.hpp"

#include <sys/socket.h>

#include <cmath>
#include <cstdio>

#include "seccost/timeutil.hpp"

namespace seccost {

RoomModel::RoomModel(double temperature_c, double heat_gain_c_per_tick,
                     double cooling_c_per_tick, uint64_t rng_seed)
    : temperature_c_(temperature_c), heat_gain_(heat_gain_c_per_tick),
      cooling_(cooling_c_per_tick), rng_(rng_seed) {
    if (heat_gain_ <= 0.0 || cooling_ <= 0.0)
        throw std::invalid_argument("heat gain and cooling must be positive");
    if (!std::isfinite(temperature_c_))
        throw std::invalid_argument("room temperature must be finite");
}

double RoomModel::draw_noise() {
    // Fixed mapping instead of std::uniform_real_distribution so the same
    // seed draws the same sequence on every standard library.
    double unit = static_cast<double>(rng_()) / 18446744073709551616.0; // 2^64
    return -kNoiseAmplitude + 2.0 * kNoiseAmplitude * unit;
}

void RoomModel::tick() {
    std::lock_guard lock(mu_);
    temperature_c_ += heat_gain_ - (ac_on_ ? cooling_ : 0.0) + draw_noise();
}

void RoomModel::set_ac(bool on) {
    std::lock_guard lock(mu_);
    ac_on_ = on;
}

bool RoomModel::ac_on() const {
    std::lock_guard lock(mu_);
    return ac_on_;
}

double RoomModel::temperature_c() const {
    std::lock_guard lock(mu_);
    return temperature_c_;
}

void RoomModel::reset(double temperature_c, uint64_t rng_seed) {
    std::lock_guard lock(mu_);
    temperature_c_ = temperature_c;
    ac_on_ = false;
    rng_.seed(rng_seed);
}

void ControllerPolicy::validate() const {
    if (!std::isfinite(threshold_c))
        throw std::invalid_argument("threshold must be finite");
    if (loop_iterations < 1)
        throw std::invalid_argument("loop_iterations must be >= 1");
}

std::string format_temperature(double celsius) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.1f", celsius);
    return buf;
}

ExchangeResult traced_exchange(ClientChannel& chan, Tracer& tracer,
                               const InteractionId& interaction, const std::string& task_name,
                               Frame request) {
    request.header.interaction = interaction.value;
    request.header.sender = chan.sender_name();
    uint64_t request_plain = plaintext_frame_bytes(request);

    std::string wire = chan.prepare(std::move(request));

    OpenTask task = tracer.begin_task(interaction, task_name);
    chan.send_wire(wire);
    auto body = chan.recv_body();
    if (!body)
        throw std::runtime_error("peer closed connection during " + task_name);
    // Response plaintext size is derivable without unsealing: sealed frames
    // carry exactly the constant overhead on top of the plaintext frame.
    bool sealed = false;
    if (auto header = try_parse_header(*body)) sealed = header->encrypted;
    uint64_t response_plain = kLengthPrefixBytes + body->size() - (sealed ? kAeadOverheadBytes : 0);
    tracer.end_task(task, request_plain + response_plain);

    ExchangeResult result;
    result.response = chan.open_body(*body);
    result.wire_attribution = request_plain + response_plain;
    return result;
}

SensorService::SensorService(const Endpoint& listen, ChannelConfig channel, RoomModel& room,
                             Tracer& tracer)
    : SensorService(listen_on(listen), std::move(channel), room, tracer) {}

SensorService::SensorService(Socket listener, ChannelConfig channel, RoomModel& room,
                             Tracer& tracer)
    : channel_(std::move(channel)), room_(room), tracer_(tracer) {
    channel_.validate();
    listener_ = std::move(listener);
    endpoint_ = listener_.local_endpoint();
    acceptor_ = std::thread(&SensorService::accept_loop, this);
}

SensorService::~SensorService() { stop(); }

void SensorService::register_with_cloud(const Endpoint& cloud_ep,
                                        const InteractionId& interaction,
                                        const Endpoint& advertised) {
    auto chan = ClientChannel::open(channel_, cloud_ep, tracer_, interaction,
                                    tracer_.component().name);
    Frame request;
    request.header.message_type = "REGISTER";
    request.payload = encode_registration_payload(kTemperatureService, advertised);
    auto result = traced_exchange(chan, tracer_, interaction, "register", std::move(request));
    chan.close();
    if (result.response.header.message_type != "REGISTER_OK")
        throw std::runtime_error("registration failed: " + result.response.payload);
}

void SensorService::accept_loop() {
    while (!stopping_.load()) {
        auto client = accept_on(listener_);
        if (!client) break;
        std::lock_guard lock(sessions_mu_);
        if (stopping_.load()) break;
        sessions_.emplace_back(&SensorService::serve, this, std::move(*client));
    }
}

void SensorService::serve(Socket client) {
    int fd = client.fd();
    {
        std::lock_guard lock(sessions_mu_);
        live_fds_.insert(fd);
    }
    ServerSession session(std::move(client), channel_, tracer_, tracer_.component().name);
    try {
        while (auto request = session.next_request()) {
            Frame response;
            if (request->header.message_type == "MEASURE_REQUEST") {
                InteractionId interaction(request->header.interaction);
                OpenTask task = tracer_.begin_task(interaction, "measure-temperature");
                room_.tick();
                double reading = room_.temperature_c();
                tracer_.end_task(task, 0);
                response = Frame{{"MEASURE_RESPONSE", request->header.interaction, "", false},
                                 format_temperature(reading)};
            } else {
                response = Frame{{"ERROR", request->header.interaction, "", false},
                                 "unexpected message type: " + request->header.message_type};
            }
            session.respond(std::move(response));
        }
    } catch (const std::exception&) {
        // Session already sent ERROR where the protocol requires it.
    }
    std::lock_guard lock(sessions_mu_);
    live_fds_.erase(fd);
}

void SensorService::stop() {
    if (stopping_.exchange(true)) return;
    listener_.shutdown_both();
    listener_.close();
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> sessions;
    {
        std::lock_guard lock(sessions_mu_);
        sessions.swap(sessions_);
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : sessions)
        if (t.joinable()) t.join();
}

InteractionOutcome run_controller(const Endpoint& cloud_ep, const ControllerPolicy& policy,
                                  const ChannelConfig& channel, Tracer& tracer,
                                  const InteractionId& interaction, RoomModel& room) {
    policy.validate();
    InteractionOutcome outcome;
    try {
        Endpoint provider;
        {
            auto chan = ClientChannel::open(channel, cloud_ep, tracer, interaction,
                                            tracer.component().name);
            Frame request;
            request.header.message_type = "ORCH_REQUEST";
            request.payload = kTemperatureService;
            auto result = traced_exchange(chan, tracer, interaction, "discover",
                                          std::move(request));
            chan.close();
            if (result.response.header.message_type != "ORCH_RESPONSE") {
                outcome.error = "discovery failed: " + result.response.payload;
                return outcome;
            }
            provider = parse_endpoint_payload(result.response.payload);
        }

        auto chan = ClientChannel::open(channel, provider, tracer, interaction,
                                        tracer.component().name);
        for (uint32_t i = 0; i < policy.loop_iterations; ++i) {
            if (policy.request_period_ms > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(policy.request_period_ms));

            Frame request;
            request.header.message_type = "MEASURE_REQUEST";
            auto result = traced_exchange(chan, tracer, interaction, "request-temperature",
                                          std::move(request));
            if (result.response.header.message_type != "MEASURE_RESPONSE") {
                outcome.error = "measurement failed: " + result.response.payload;
                return outcome;
            }
            double reading = parse_double(result.response.payload);

            OpenTask task = tracer.begin_task(interaction, "decide-actuate");
            bool activate = reading > policy.threshold_c;
            room.set_ac(activate);
            tracer.end_task(task, 0);

            outcome.readings.push_back({reading, activate});
        }
        chan.close();
        outcome.ok = true;
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what(); // partial traces up to the failure are retained
    }
    return outcome;
}

} // namespace seccost
