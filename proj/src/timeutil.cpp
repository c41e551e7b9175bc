#include "seccost/timeutil.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <stdexcept>

namespace seccost {

int64_t wall_utc_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

int64_t monotonic_ns() {
    using namespace std::chrono;
    return duration_cast<nanoseconds>(steady_clock::now().time_since_epoch()).count();
}

std::string to_iso8601_ms(int64_t utc_ms) {
    time_t secs = static_cast<time_t>(utc_ms / 1000);
    int ms = static_cast<int>(utc_ms % 1000);
    if (ms < 0) { // round toward -inf for pre-epoch stamps
        ms += 1000;
        secs -= 1;
    }
    tm tm_utc{};
    gmtime_r(&secs, &tm_utc);
    char buf[40];
    snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm_utc.tm_year + 1900,
             tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec, ms);
    return buf;
}

int64_t from_iso8601_ms(const std::string& s) {
    tm tm_utc{};
    int ms = 0;
    if (sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &tm_utc.tm_year, &tm_utc.tm_mon,
               &tm_utc.tm_mday, &tm_utc.tm_hour, &tm_utc.tm_min, &tm_utc.tm_sec, &ms) != 7)
        throw std::invalid_argument("bad ISO-8601 timestamp: " + s);
    tm_utc.tm_year -= 1900;
    tm_utc.tm_mon -= 1;
    time_t secs = timegm(&tm_utc);
    if (secs == static_cast<time_t>(-1))
        throw std::invalid_argument("unrepresentable ISO-8601 timestamp: " + s);
    return static_cast<int64_t>(secs) * 1000 + ms;
}

std::string format_double(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    double v = strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::invalid_argument("bad numeric field: " + s);
    return v;
}

} // namespace seccost
