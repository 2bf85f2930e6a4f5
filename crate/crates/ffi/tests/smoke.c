#include <stdio.h>
#include <string.h>

#include "coverless.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        CoverlessStatus s_ = (call);                                       \
        if (s_ != COVERLESS_STATUS_OK) {                                   \
            fprintf(stderr, "%s: %d %s\n", #call, s_, coverless_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

static const char CORPUS[] =
    "{\"images\": ["
    "{\"image_id\": \"a\", \"width\": 100, \"height\": 100,"
    " \"objects\": [{\"label\": \"cat\", \"confidence\": 0.9, \"bbox\": [0, 0, 80, 80]}]},"
    "{\"image_id\": \"b\", \"width\": 100, \"height\": 100,"
    " \"objects\": [{\"label\": \"dog\", \"confidence\": 0.8, \"bbox\": [5, 5, 60, 70]}]}"
    "]}";

int main(void) {
    CoverlessDictionary *dict = NULL;
    CoverlessKey *key = NULL;
    CoverlessIndex *index = NULL;
    CoverlessHideResult *result = NULL;
    const uint8_t *corpus = (const uint8_t *)CORPUS;
    size_t corpus_len = strlen(CORPUS);
    const char *msg = "hi";

    CHECK(coverless_dictionary_build(corpus, corpus_len, 0.15, 0.5, false, &dict));
    CHECK(coverless_key_derive(7, 256, &key));
    CHECK(coverless_index_build(corpus, corpus_len, dict, key, 0.15, 0.5, &index));
    CHECK(coverless_hide(index, (const uint8_t *)msg, 2, true, 1, &result));

    size_t m = coverless_hide_result_count(result);
    uint32_t starts[64], lengths[64];
    char stego[8192];
    size_t used = (size_t)snprintf(stego, sizeof stego, "{\"images\": [");
    if (m > 64) return 1;
    for (size_t i = 0; i < m; i++) {
        CHECK(coverless_hide_result_position_key(result, i, &starts[i], &lengths[i]));
        const char *id = coverless_hide_result_image_id(result, i);
        const char *label = strcmp(id, "a") == 0 ? "cat" : "dog";
        used += (size_t)snprintf(stego + used, sizeof stego - used,
                                 "%s{\"image_id\": \"%s\", \"width\": 100, \"height\": 100,"
                                 " \"objects\": [{\"label\": \"%s\", \"confidence\": 0.9, \"bbox\": [0, 0, 80, 80]}]}",
                                 i ? "," : "", id, label);
    }
    used += (size_t)snprintf(stego + used, sizeof stego - used, "]}");

    CoverlessBuffer out = {0};
    size_t padded = 1;
    CHECK(coverless_extract((const uint8_t *)stego, used, starts, lengths, m, dict, key, 0.15, 0.5, &out, &padded));
    int ok = out.len == 2 && memcmp(out.data, msg, 2) == 0 && padded == 0;
    printf("%s %zu images\n", ok ? "ok" : "mismatch", m);

    coverless_buffer_free(out);
    coverless_hide_result_free(result);
    coverless_index_free(index);
    coverless_key_free(key);
    coverless_dictionary_free(dict);
    return ok ? 0 : 1;
}
