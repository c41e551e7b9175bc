#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "seccost/channel.hpp"
#include "seccost/cloud.hpp"
#include "seccost/ids.hpp"
#include "seccost/tracer.hpp"

namespace seccost {

inline constexpr const char* kTemperatureService = "temperature";

// The simulated physical room, shared between the sensor that reads it and
// the controller whose AC decision feeds back into it. Per tick:
//   temperature += heat_gain - (cooling if ac_on) + noise,  noise ~ U[-0.05, 0.05]
class RoomModel {
public:
    RoomModel(double temperature_c, double heat_gain_c_per_tick, double cooling_c_per_tick,
              uint64_t rng_seed);

    void tick();
    void set_ac(bool on);
    bool ac_on() const;
    double temperature_c() const;
    void reset(double temperature_c, uint64_t rng_seed);

    static constexpr double kNoiseAmplitude = 0.05;

private:
    double draw_noise();

    mutable std::mutex mu_;
    double temperature_c_;
    double heat_gain_;
    double cooling_;
    bool ac_on_ = false;
    std::mt19937_64 rng_;
};

struct ControllerPolicy {
    double threshold_c = 25.0;
    uint32_t loop_iterations = 10;
    uint32_t request_period_ms = 0;

    void validate() const;
};

struct TemperatureReading {
    double temperature_c = 0.0;
    bool ac_activated = false;
};

struct InteractionOutcome {
    bool ok = false;
    std::string error;
    std::vector<TemperatureReading> readings;
};

// Temperature sensor component C1: answers MEASURE_REQUEST with the room's
// current reading, advancing the room one tick per request.
class SensorService {
public:
    SensorService(const Endpoint& listen, ChannelConfig channel, RoomModel& room, Tracer& tracer);
    // Takes an already-bound listener so callers can learn the port first.
    SensorService(Socket listener, ChannelConfig channel, RoomModel& room, Tracer& tracer);
    ~SensorService();
    SensorService(const SensorService&) = delete;
    SensorService& operator=(const SensorService&) = delete;

    Endpoint endpoint() const { return endpoint_; }

    // Step 1: announce the advertised endpoint to the framework. Traced as
    // "register"; throws on an ERROR response.
    void register_with_cloud(const Endpoint& cloud_ep, const InteractionId& interaction,
                             const Endpoint& advertised);

    void stop();

private:
    void accept_loop();
    void serve(Socket client);

    ChannelConfig channel_;
    RoomModel& room_;
    Tracer& tracer_;
    Socket listener_;
    Endpoint endpoint_;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex sessions_mu_;
    std::vector<std::thread> sessions_;
    std::set<int> live_fds_;
};

// AC controller component C2: discovers the temperature provider through the
// framework, then loops request-temperature / decide-actuate, feeding the AC
// decision back into the room. Returns per-iteration readings and decisions.
InteractionOutcome run_controller(const Endpoint& cloud_ep, const ControllerPolicy& policy,
                                  const ChannelConfig& channel, Tracer& tracer,
                                  const InteractionId& interaction, RoomModel& room);

// One request/response exchange measured as `task_name`: the span covers
// send and receive only; sealing and opening are traced separately so
// security work never hides inside a use-case task.
struct ExchangeResult {
    Frame response;
    uint64_t wire_attribution = 0;
};
ExchangeResult traced_exchange(ClientChannel& chan, Tracer& tracer,
                               const InteractionId& interaction, const std::string& task_name,
                               Frame request);

std::string format_temperature(double celsius);

} // namespace seccost
