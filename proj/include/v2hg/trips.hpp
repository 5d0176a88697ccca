#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "v2hg/errors.hpp"

namespace v2hg {

/// Gaussian truncated to [lo, hi], sampled by rejection.
struct TruncatedGaussian {
    double mean = 0.0;
    double sd = 1.0;
    double lo = -1.0;
    double hi = 1.0;

    void validate(const char* what) const {
        if (!(sd > 0.0) || !(lo < hi) || !(mean >= lo && mean <= hi))
            throw ValidationError(std::string("trips: invalid distribution for ") + what);
    }

    template <class Rng>
    double operator()(Rng& rng) const {
        std::normal_distribution<double> n(mean, sd);
        for (;;) {
            const double x = n(rng);
            if (x >= lo && x <= hi) return x;
        }
    }
};

struct TripParams {
    TruncatedGaussian pickup_hour{8.0, 1.0, 6.0, 10.0};
    TruncatedGaussian duration_hours{9.0, 1.0, 7.0, 11.0};
    TruncatedGaussian distance_km{35.0, 2.5, 30.0, 40.0};

    void validate() const {
        pickup_hour.validate("pickup time");
        duration_hours.validate("travel duration");
        distance_km.validate("distance");
        if (pickup_hour.lo < 0.0 || pickup_hour.hi > 22.0)
            throw ValidationError("trips: pickup hours must lie in [0, 22]");
        if (duration_hours.lo < 1.0) throw ValidationError("trips: travel duration must be >= 1 h");
        if (distance_km.lo < 0.0) throw ValidationError("trips: distance must be >= 0");
    }
};

struct Trip {
    int day = 0;
    int pickup_hour = 0;  // hour of year the car leaves
    int arrival_hour = 0; // hour of year the car is back (first parked hour)
    double distance_km = 0.0;

    int driving_hours() const { return arrival_hour - pickup_hour; }
};

struct TripSchedule {
    std::vector<Trip> trips;
};

/// One trip per day. Times snap to whole hours; a return after 23:00 is
/// clamped to 23:00 of the same day.
inline TripSchedule generate_trips(int days, unsigned long long seed, const TripParams& p = {}) {
    p.validate();
    if (days < 1) throw ValidationError("trips: need at least one day");
    std::mt19937_64 rng(seed);
    TripSchedule s;
    s.trips.reserve(static_cast<std::size_t>(days));
    for (int d = 0; d < days; ++d) {
        Trip t;
        t.day = d;
        const int pick = static_cast<int>(std::lround(p.pickup_hour(rng)));
        const int dur = std::max(1, static_cast<int>(std::lround(p.duration_hours(rng))));
        t.distance_km = p.distance_km(rng);
        const int arr = std::min(pick + dur, 23);
        t.pickup_hour = 24 * d + pick;
        t.arrival_hour = 24 * d + std::max(arr, pick + 1);
        s.trips.push_back(t);
    }
    return s;
}

} // namespace v2hg
