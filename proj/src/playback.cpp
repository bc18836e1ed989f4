#include "twin/playback.hpp"

#include <algorithm>
#include <cmath>

namespace twin {

std::size_t frame_index_at(double media_time, double anim_fps, int frame_count, bool loop_mode)
{
    const double raw = std::floor(std::max(0.0, media_time) * anim_fps + frame_snap_epsilon);
    const auto count = static_cast<double>(frame_count);
    if (loop_mode) {
        return static_cast<std::size_t>(std::fmod(raw, count));
    }
    return static_cast<std::size_t>(std::min(raw, count - 1.0));
}

bool PlaybackState::is_visible(const std::string& id) const
{
    auto it = visibility.find(id);
    if (it == visibility.end()) throw UnknownEntityError(id);
    return it->second;
}

PlaybackState make_playback_state(const SceneManifest& manifest)
{
    PlaybackState s;
    for (const auto& e : manifest.entities) {
        s.visibility[e.id] = e.initially_visible;
    }
    return s;
}

namespace {

double wrap_or_clamp(double t, const PlaybackTiming& timing, bool loop_mode)
{
    t = std::max(0.0, t);
    if (loop_mode) {
        const double d = timing.loop_duration();
        t = std::fmod(t, d);
        return t < 0.0 ? t + d : t;
    }
    return std::min(t, timing.end_time());
}

}  // namespace

PlaybackState advance(PlaybackState state, const PlaybackTiming& timing, double wall_dt)
{
    if (!(wall_dt >= 0.0) || !std::isfinite(wall_dt)) {
        throw std::invalid_argument("wall_dt must be finite and non-negative");
    }
    if (state.playing) {
        state.media_time = wrap_or_clamp(state.media_time + wall_dt, timing, state.loop_mode);
    }
    return state;
}

PlaybackState seek(PlaybackState state, const PlaybackTiming& timing, double media_time)
{
    if (!std::isfinite(media_time)) {
        throw std::invalid_argument("seek time must be finite");
    }
    state.media_time = wrap_or_clamp(media_time, timing, state.loop_mode);
    return state;
}

PlaybackState set_visibility(PlaybackState state, const std::string& id, bool visible)
{
    auto it = state.visibility.find(id);
    if (it == state.visibility.end()) throw UnknownEntityError(id);
    it->second = visible;
    return state;
}

}  // namespace twin
