#pragma once

#include "twin/scene.hpp"

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

namespace twin {

struct PlaybackTiming {
    double anim_fps = 30.0;
    int frame_count = 1;

    static PlaybackTiming of(const SceneManifest& m) { return {m.anim_fps, m.frame_count}; }

    /// Media time at which the last frame starts; non-looping playback rests here.
    double end_time() const { return (frame_count - 1) / anim_fps; }
    /// Length of one loop iteration.
    double loop_duration() const { return frame_count / anim_fps; }
};

/// Fraction of a frame tolerated below an integer boundary when flooring
/// media_time * anim_fps, so accumulated clock rounding (e.g. 3 x 1/90 s)
/// still lands on the intended frame.
inline constexpr double frame_snap_epsilon = 1e-9;

/// floor(media_time * anim_fps), then wrapped (loop) or clamped to the last frame.
std::size_t frame_index_at(double media_time, double anim_fps, int frame_count, bool loop_mode);

class UnknownEntityError : public std::invalid_argument {
public:
    explicit UnknownEntityError(const std::string& id) : std::invalid_argument("unknown entity id \"" + id + "\""), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

struct PlaybackState {
    bool playing = false;
    double media_time = 0.0;
    bool loop_mode = false;
    std::map<std::string, bool> visibility;

    bool is_visible(const std::string& id) const;

    friend bool operator==(const PlaybackState&, const PlaybackState&) = default;
};

/// Paused at t = 0, no looping, visibility from each entity's initially_visible.
PlaybackState make_playback_state(const SceneManifest& manifest);

/// Advances media time by wall_dt if playing, then wraps or clamps.
/// Throws std::invalid_argument for negative or non-finite wall_dt.
PlaybackState advance(PlaybackState state, const PlaybackTiming& timing, double wall_dt);

PlaybackState seek(PlaybackState state, const PlaybackTiming& timing, double media_time);

/// Throws UnknownEntityError if id is not an entity of the scene.
PlaybackState set_visibility(PlaybackState state, const std::string& id, bool visible);

}  // namespace twin
