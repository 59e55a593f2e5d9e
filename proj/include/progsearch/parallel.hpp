#pragma once

namespace progsearch {

/// Caps worker threads used by searches. n <= 0 restores the machine default.
void set_num_threads(int n);
int num_threads();
/// False when built without OpenMP; everything then runs on the calling thread.
bool parallel_enabled();

}  // namespace progsearch
