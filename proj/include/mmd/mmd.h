/* C interface of the media-modulation massive-access simulator. */
#ifndef MMD_MMD_H
#define MMD_MMD_H

#include <stddef.h>

#if defined(MMD_BUILDING_LIBRARY)
#define MMD_API __attribute__((visibility("default")))
#else
#define MMD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmd_status {
  MMD_OK = 0,
  MMD_ERR_USAGE = 1,    /* bad argument, unknown algorithm, dimension mismatch */
  MMD_ERR_CONFIG = 2,   /* invalid or unknown configuration value */
  MMD_ERR_NUMERIC = 3,  /* non-finite state, singular system */
  MMD_ERR_IO = 4,       /* unreadable config, unwritable output */
  MMD_ERR_INTERNAL = 5
} mmd_status;

/* Opaque configuration handle (key/value scenario description). */
typedef struct mmd_config mmd_config;

MMD_API const char* mmd_version(void);

/* Message of the last failed call on this thread; empty if none. */
MMD_API const char* mmd_last_error(void);

MMD_API mmd_status mmd_config_create(mmd_config** out);
MMD_API void mmd_config_destroy(mmd_config* cfg);
/* Merges the keys of a config file (later keys override earlier ones). */
MMD_API mmd_status mmd_config_load(mmd_config* cfg, const char* path);
MMD_API mmd_status mmd_config_set(mmd_config* cfg, const char* key, const char* value);
/* Copies the value of `key` into buf (NUL-terminated). *needed receives the
   required size including the terminator. Missing keys give MMD_ERR_CONFIG. */
MMD_API mmd_status mmd_config_get(const mmd_config* cfg, const char* key, char* buf, size_t len, size_t* needed);

/* Monte-Carlo sweep; writes the results CSV to `out_path` ("-" for stdout). */
MMD_API mmd_status mmd_simulate(const mmd_config* cfg, const char* out_path);
/* State-evolution trace CSV for every value of an snr_db sweep (or snr_db). */
MMD_API mmd_status mmd_state_evolution(const mmd_config* cfg, const char* out_path);
/* Multi-frame CSI tracking CSV, both strategies, track.seeds independent runs. */
MMD_API mmd_status mmd_track_csi(const mmd_config* cfg, const char* out_path);
/* Complex multiplications per frame of `algorithm` (dsamp, amp, lmmse). */
MMD_API mmd_status mmd_complexity(const mmd_config* cfg, const char* algorithm, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MMD_MMD_H */
