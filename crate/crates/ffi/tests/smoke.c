#include <stdio.h>
#include <string.h>

#include "ontorec.h"

int main(int argc, char **argv) {
    if (argc < 3) {
        fprintf(stderr, "usage: smoke CORPUS ACCEPTANCE\n");
        return 2;
    }
    OntorecEngine *engine = NULL;
    if (ontorec_engine_load(argv[1], argv[2], NULL, &engine) != ONTOREC_STATUS_OK) {
        fprintf(stderr, "load: %s\n", ontorec_last_error_message());
        return 1;
    }
    size_t count = 0;
    ontorec_engine_ontology_count(engine, &count);

    char *json = NULL;
    OntorecStatus status = ontorec_recommend_json(engine, "{\"input\":\"melanoma of the skin\"}", &json);
    if (status != ONTOREC_STATUS_OK || json == NULL) {
        fprintf(stderr, "recommend: %d\n", (int)status);
        return 1;
    }
    printf("%s %zu %s\n", ontorec_version(), count, json);
    ontorec_string_free(json);

    status = ontorec_recommend_json(engine, "{\"input\":\"x\",\"wc\":2}", &json);
    int rejected = status == ONTOREC_STATUS_REJECTED && strstr(json, "InvalidWeights") != NULL;
    ontorec_string_free(json);
    ontorec_engine_free(engine);
    return rejected ? 0 : 1;
}
