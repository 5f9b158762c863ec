#pragma once

#include <string>

#include "vasim/core.hpp"

namespace vasim {

/// Tunable model parameters. Defaults mirror the measured values shipped in
/// tables/paper-defaults.json; every field can be overridden from the
/// scenario file's "config" block.
struct SimConfig {
    // acoustics
    int cooldown_after = 5;                  // consecutive same-sample uses before replay defense kicks in
    Millis cooldown_idle_reset_ms = 180000;  // inactivity that restores a worn-out sample
    double score10_probability = 0.99;       // probability assigned to a perfect reliability score

    // ssml
    Millis break_policy_limit_ms = 10000;    // max silence per consecutive break run
    int output_speech_limit = 8000;          // max characters per skill response
    Millis per_word_ms = 400;                // speech duration estimate
    Millis audio_segment_ms = 60000;         // assumed duration of an external audio segment

    // device
    Millis pairing_duration_ms = 25000;
    Millis confirm_window_ms = 10000;        // how long a pending yes/no confirmation stays open
    int duck_attenuation = 3;                // volume steps removed while ducking
    double sometimes_confirm_p = 0.5;        // chance the device double-checks a "sometimes" action

    // skill runtime
    Millis reprompt_window_ms = 8000;

    // masquerading skill
    Millis oracle_latency_ms = 5000;         // default round-trip for a realistic reply
    Millis reply_window_ms = 5000;           // how long the skill waits before speaking
    std::size_t reply_truncate_chars = 1200; // keeps the trailing silence chain above one hour
    double transcription_noise_p = 0.0;      // chance a retrieved reply comes back garbled
    std::string filler_reply = "sorry, i did not catch that";

    // attacker
    Millis confirm_delay_ms = 6000;          // trailing "yes" offset for confirmed actions
    int max_retries = 3;                     // extra attempts after a failed self-issue
    Millis retry_delay_ms = 4000;

    // household
    Millis reaction_delay_ms = 2000;         // lag between perceiving something and acting on it

    // defenses
    Millis fingerprint_window_ms = 3000;
    bool open_self_direction_multi = false;  // open placement: classify self-emission as multi-direction?
};

} // namespace vasim
