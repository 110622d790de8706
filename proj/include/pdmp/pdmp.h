#ifndef PDMP_PDMP_H
#define PDMP_PDMP_H

#include <stddef.h>

#if defined(_WIN32)
#define PDMP_API __declspec(dllexport)
#else
#define PDMP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdmp_status {
  PDMP_OK = 0,
  PDMP_ERR_NULL_POINTER = 1,
  PDMP_ERR_INVALID_ARGUMENT = 2,
  PDMP_ERR_CONFIG = 3,
  PDMP_ERR_DOMAIN = 4,
  PDMP_ERR_NUMERIC = 5,
  PDMP_ERR_TOLERANCE = 6,
  PDMP_ERR_INTERNAL = 7,
  PDMP_ERR_IO = 8
} pdmp_status;

typedef struct pdmp_config pdmp_config;
typedef struct pdmp_result pdmp_result;
typedef struct pdmp_model pdmp_model;

PDMP_API const char* pdmp_version(void);
/* Message of the last failing call on this thread; "" after a success. */
PDMP_API const char* pdmp_last_error(void);

/* 0 restores the PDMP_THREADS default. */
PDMP_API void pdmp_set_threads(size_t n);

PDMP_API pdmp_status pdmp_config_parse(const char* json_text, pdmp_config** out);
PDMP_API pdmp_status pdmp_config_load(const char* path, pdmp_config** out);
PDMP_API pdmp_status pdmp_config_set(pdmp_config* cfg, const char* key, const char* value);
/* Caller frees the string with pdmp_string_free. */
PDMP_API pdmp_status pdmp_config_dump(const pdmp_config* cfg, char** out);
PDMP_API void pdmp_config_free(pdmp_config* cfg);
PDMP_API void pdmp_string_free(char* s);

/* Runs a subcommand. A result is produced whenever the pipeline ran, even if
   a tolerance failed; out_dir may be NULL to skip writing files. */
PDMP_API pdmp_status pdmp_run(const pdmp_config* cfg, const char* subcommand, const char* out_dir,
                              pdmp_result** out);
PDMP_API int pdmp_result_exit_code(const pdmp_result* r);
PDMP_API const char* pdmp_result_message(const pdmp_result* r);
PDMP_API const char* pdmp_result_summary(const pdmp_result* r);
PDMP_API size_t pdmp_result_values(const pdmp_result* r, const double** values);
PDMP_API void pdmp_result_free(pdmp_result* r);

PDMP_API pdmp_status pdmp_model_create(const pdmp_config* cfg, pdmp_model** out);
PDMP_API void pdmp_model_free(pdmp_model* m);
PDMP_API size_t pdmp_model_grid_size(const pdmp_model* m);
PDMP_API size_t pdmp_model_dimension(const pdmp_model* m, size_t mode);
/* direction: +1 forward, -1 backward. Infinite when the boundary is never hit. */
PDMP_API pdmp_status pdmp_model_hitting_time(const pdmp_model* m, size_t mode, const double* coords,
                                             int direction, double* out);
/* Flows coords in place for time t (stops at the boundary); *at_boundary set
   when it was reached. */
PDMP_API pdmp_status pdmp_model_advance(const pdmp_model* m, size_t mode, double* coords, double t,
                                        int* at_boundary);

#ifdef __cplusplus
}
#endif

#endif
