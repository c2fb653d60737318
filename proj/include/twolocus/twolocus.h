#ifndef TWOLOCUS_TWOLOCUS_H
#define TWOLOCUS_TWOLOCUS_H

#include <stddef.h>

#if defined(TWOLOCUS_BUILDING_LIBRARY)
#define TL_API __attribute__((visibility("default")))
#else
#define TL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tl_status {
  TL_OK = 0,
  TL_ERR_INVALID_ARGUMENT = 1,
  TL_ERR_CAPACITY = 2,
  TL_ERR_NUMERIC = 3,
  TL_ERR_UNSUPPORTED = 4,
  TL_ERR_IO = 5,
  TL_ERR_INTEGRITY = 6,
  TL_ERR_NOT_FOUND = 7,
  TL_ERR_INTERNAL = 8
} tl_status;

/* Arithmetic and approximation switches. */
enum { TL_AUTO = 0, TL_EXACT = 1, TL_FLOAT = 2 };
enum { TL_APPROX_AUTO = 0, TL_APPROX_ON = 1, TL_APPROX_OFF = 2 };

typedef struct tl_model tl_model;
typedef struct tl_series tl_series;
typedef struct tl_table tl_table;

TL_API const char* tl_version(void);
/* Message of the last failure on the calling thread; never NULL. */
TL_API const char* tl_last_error(void);
/* Strings returned through char** out-parameters are released with this. */
TL_API void tl_string_free(char* s);

/* Model spec is a JSON object:
 *   {"preset": "paper-pim"}
 *   {"K": 2, "L": 2, "theta_a": "1/100", "theta_b": "1/100",
 *    "P_a": [["1/2","1/2"],["1/2","1/2"]], "P_b": ..., "sigma": [[0,1],[1,2]]}
 * Fields given next to a preset override it. Missing P means uniform. */
TL_API tl_status tl_model_create(const char* spec_json, tl_model** out);
TL_API void tl_model_free(tl_model* m);
TL_API tl_status tl_model_describe(const tl_model* m, char** json_out);

/* JSON array of the (0,0,c) samples with |c| = n, in ascending c order. */
TL_API tl_status tl_samples(const tl_model* m, int n, int dimorphic_only, char** json_out);

/* Samples use the text form "a=[..];b=[..];c=[[..],[..]]"; a and b may be omitted. */
TL_API tl_status tl_expand(const tl_model* m, const char* sample, int M, int arithmetic, int approx, tl_series** out);
TL_API void tl_series_free(tl_series* s);
TL_API int tl_series_order(const tl_series* s);
/* Exact rational "p/q" of q_k. */
TL_API tl_status tl_series_coeff(const tl_series* s, int k, char** out);
TL_API tl_status tl_series_coeff_double(const tl_series* s, int k, double* out);
/* method: "ps:M", "pade:M" or "otr". rho > 0 or +inf. */
TL_API tl_status tl_series_evaluate(const tl_series* s, const char* method, double rho, double eps, double* out);
/* {"sample":..,"key":..,"M":..,"arithmetic":..,"approx_g0":..,"coeffs":[..],"values":[..]} */
TL_API tl_status tl_series_json(const tl_series* s, char** json_out);
/* Roots of the staircase approximants for M = 0..order, or one [U/V] when U >= 0. */
TL_API tl_status tl_series_roots(const tl_series* s, int U, int V, char** json_out);

/* rhos: count positive values. methods: comma list of ps:M, pade:M, otr, exact. */
TL_API tl_status tl_curve(const tl_series* s, const tl_model* m, const double* rhos, size_t count, const char* methods,
                          double eps, char** json_out);

TL_API tl_status tl_error_study(const tl_model* m, int n, double rho, const char* methods, int approx, double eps,
                                char** json_out);

/* mode: "rational" (rho is a rational string), "float", or "symbolic" (rho ignored). */
TL_API tl_status tl_exact(const tl_model* m, const char* sample, const char* rho, const char* mode, char** json_out);
TL_API tl_status tl_total_probability(const tl_model* m, int n, const char* rho, char** out);

TL_API tl_status tl_table_build(const tl_model* m, int n_max, int M, int arithmetic, int approx, const char* path);
TL_API tl_status tl_table_open(const char* path, tl_table** out);
TL_API void tl_table_free(tl_table* t);
TL_API tl_status tl_table_header(const tl_table* t, char** json_out);
TL_API tl_status tl_table_lookup(const tl_table* t, const char* sample, const char* method, double rho, double eps,
                                 char** json_out);

/* Writes content to path through a temporary file and rename. */
TL_API tl_status tl_write_atomic(const char* path, const char* content);

#ifdef __cplusplus
}
#endif

#endif
