#ifndef PRIVLOC_H
#define PRIVLOC_H

/* C interface to libprivloc. Every call returns a status; on failure the
 * message is available from privloc_last_error() on the same thread until
 * the next failing call. Strings returned through char** are owned by the
 * caller and released with privloc_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define PRIVLOC_API __attribute__((visibility("default")))
#else
#define PRIVLOC_API
#endif

typedef enum privloc_status {
  PRIVLOC_OK = 0,
  PRIVLOC_E_INVALID_ARGUMENT = 1,
  PRIVLOC_E_CONFIG = 2,
  PRIVLOC_E_DISTANCE_VIOLATION = 3,
  PRIVLOC_E_NOT_FOUND = 4,
  PRIVLOC_E_IO = 5,
  PRIVLOC_E_PROTOCOL = 6,
  PRIVLOC_E_UNAVAILABLE = 7,
  PRIVLOC_E_INTERNAL = 8,
  PRIVLOC_E_UNAUTHORIZED = 9
} privloc_status;

PRIVLOC_API const char* privloc_version(void);
/* "ok", "invalid_argument", ... */
PRIVLOC_API const char* privloc_status_name(privloc_status status);
/* Never NULL; empty when this thread has not seen a failure. */
PRIVLOC_API const char* privloc_last_error(void);
PRIVLOC_API void privloc_string_free(char* s);

/* Three hex lines written atomically with mode 0600. Keys come from the
 * operating system CSPRNG. */
PRIVLOC_API privloc_status privloc_keygen(uint32_t lambda_bits, const char* path);

/* ---- in-process system ---------------------------------------------------
 * Gateway plus three in-process backends. config_json (may be NULL):
 *   {"params": {...}, "keys": "path", "seed": n, "routing": "balanced",
 *    "mode": "local" | "loopback", "index": "grid" | "rtree"}
 * Without "keys", fresh keys are drawn from the CSPRNG. */
typedef struct privloc_system privloc_system;

PRIVLOC_API privloc_status privloc_system_new(const char* config_json, privloc_system** out);
PRIVLOC_API void privloc_system_free(privloc_system* sys);

PRIVLOC_API privloc_status privloc_system_subscribe(privloc_system* sys, const char* sub_id,
                                                    int64_t sw_x, int64_t sw_y, int64_t ne_x,
                                                    int64_t ne_y, const char* callback);
PRIVLOC_API privloc_status privloc_system_unsubscribe(privloc_system* sys, const char* sub_id);
/* notifications_json (may be NULL) receives a JSON array of
 * {"sub_id", "node_id", "ts"} objects. */
PRIVLOC_API privloc_status privloc_system_publish(privloc_system* sys, const char* node_id,
                                                  int64_t x0, int64_t y0, int64_t x1, int64_t y1,
                                                  int64_t ts, char** notifications_json);
PRIVLOC_API privloc_status privloc_system_flush(privloc_system* sys, size_t* uploaded);
/* JSON object with per-backend query, upload and part counts. */
PRIVLOC_API privloc_status privloc_system_stats(privloc_system* sys, char** stats_json);

/* ---- services ------------------------------------------------------------
 * Both bind in _new (a taken port fails with PRIVLOC_E_UNAVAILABLE) and
 * serve on background threads after _start. _stop is idempotent; for the
 * gateway it uploads pending subscriptions and drains notifications. */
typedef struct privloc_gateway_server privloc_gateway_server;
typedef struct privloc_backend_server privloc_backend_server;

/* Gateway config: {"params", "host", "port", "keys", "backends": [3],
 * "auth", "backend_auth", "flush_deadline_ms", "seed", "routing",
 * "log_level"}. PRIVLOC_PORT and PRIVLOC_KEYS override port and keys. */
PRIVLOC_API privloc_status privloc_gateway_server_new(const char* config_json,
                                                      privloc_gateway_server** out);
PRIVLOC_API uint16_t privloc_gateway_server_port(const privloc_gateway_server* s);
PRIVLOC_API privloc_status privloc_gateway_server_start(privloc_gateway_server* s);
PRIVLOC_API void privloc_gateway_server_stop(privloc_gateway_server* s);
PRIVLOC_API void privloc_gateway_server_free(privloc_gateway_server* s);

/* Backend config: {"params", "backend": {"host", "port", "index",
 * "data_dir", "auth", "verify", "log_level"}}. PRIVLOC_PORT overrides. */
PRIVLOC_API privloc_status privloc_backend_server_new(const char* config_json,
                                                      privloc_backend_server** out);
PRIVLOC_API uint16_t privloc_backend_server_port(const privloc_backend_server* s);
PRIVLOC_API privloc_status privloc_backend_server_start(privloc_backend_server* s);
PRIVLOC_API void privloc_backend_server_stop(privloc_backend_server* s);
PRIVLOC_API void privloc_backend_server_free(privloc_backend_server* s);

/* ---- reports -------------------------------------------------------------
 * kind: "simulate", "blowup", "fidelity", "priv-game", "bench".
 * request_json may be NULL for defaults; every request accepts "params"
 * and "seed". The result is a JSON object; see docs/protocol.md. */
PRIVLOC_API privloc_status privloc_run_report(const char* kind, const char* request_json,
                                              char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* PRIVLOC_H */
