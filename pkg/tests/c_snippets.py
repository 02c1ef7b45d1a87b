"""Fifty C snippets used by the normalizer property tests.

They deliberately mix declarations, control flow, pointer arithmetic,
preprocessor noise, comments, literals of every shape, and a couple of
deliberately ugly corner cases.
"""

SNIPPETS = [
    "int add(int a, int b){return a+b;}",
    "void reset(int *p, int n){ for(int i=0;i<n;i++) p[i]=0; }",
    "double area(double r){ return 3.14159 * r * r; }",
    """int max3(int a, int b, int c){
    int m = a;
    if (b > m) m = b;
    if (c > m) m = c;
    return m;
}""",
    """#include <stdio.h>
int main(void){
    printf("hello, world\\n");
    return 0;
}""",
    """char *copy_string(char *dst, const char *src){
    char *out = dst;
    while ((*dst++ = *src++) != '\\0')
        ;
    return out;
}""",
    """unsigned fib(unsigned n){
    if (n < 2) return n;
    return fib(n-1) + fib(n-2);
}""",
    """int sum(const int *xs, int n){
    int total = 0;
    for (int i = 0; i < n; ++i) total += xs[i];
    return total;
}""",
    """void swap(int *a, int *b){
    int t = *a;
    *a = *b;
    *b = t;
}""",
    """struct point { int x; int y; };
int manhattan(struct point p, struct point q){
    int dx = p.x - q.x;
    int dy = p.y - q.y;
    return (dx < 0 ? -dx : dx) + (dy < 0 ? -dy : dy);
}""",
    """long parse_digits(const char *s){
    long v = 0;
    while (*s >= '0' && *s <= '9') v = v * 10 + (*s++ - '0');
    return v;
}""",
    """/* classic buffer mistake */
void greet(char *name){
    char buf[16];
    strcpy(buf, name);
    puts(buf);
}""",
    """int clamp(int v, int lo, int hi){
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
}""",
    """void fill(float *dst, float value, unsigned count){
    for (unsigned i = 0u; i != count; i++)
        dst[i] = value;
}""",
    """int streq(const char *a, const char *b){
    while (*a && *a == *b) { a++; b++; }
    return *a == *b;
}""",
    """#define LIMIT 128
int bounded(int x){
    return x > LIMIT ? LIMIT : x;
}""",
    """int parity(unsigned x){
    int p = 0;
    while (x) { p ^= 1; x &= x - 1; }
    return p;
}""",
    """void rotate(int *a, int n){
    int last = a[n-1];
    for (int i = n-1; i > 0; i--) a[i] = a[i-1];
    a[0] = last;
}""",
    """double hypot2(double x, double y){
    return x*x + y*y;
}""",
    """int find(const int *xs, int n, int needle){
    for (int i = 0; i < n; i++)
        if (xs[i] == needle) return i;
    return -1;
}""",
    """void to_upper(char *s){
    for (; *s; s++)
        if (*s >= 'a' && *s <= 'z')
            *s -= 32;
}""",
    """unsigned hash(const char *s){
    unsigned h = 5381u;
    while (*s) h = h * 33u + (unsigned)*s++;
    return h;
}""",
    """int bits(unsigned long v){
    int n = 0;
    for (; v; v >>= 1) n += (int)(v & 1ul);
    return n;
}""",
    """switch_demo(int op, int a, int b){
    switch (op) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    default: return 0;
    }
}""",
    """void matmul2(const double m[2][2], const double v[2], double out[2]){
    out[0] = m[0][0]*v[0] + m[0][1]*v[1];
    out[1] = m[1][0]*v[0] + m[1][1]*v[1];
}""",
    """int gcd(int a, int b){
    while (b) { int t = a % b; a = b; b = t; }
    return a;
}""",
    """// integer overflow when n is large
int triangle(int n){
    return n * (n + 1) / 2;
}""",
    """void memzero(void *p, unsigned long n){
    unsigned char *b = (unsigned char *)p;
    while (n--) *b++ = 0;
}""",
    """int read_all(int fd, char *buf, int cap){
    int got = 0, r;
    while (got < cap && (r = read(fd, buf + got, cap - got)) > 0)
        got += r;
    return got;
}""",
    """float lerp(float a, float b, float t){
    return a + t * (b - a);
}""",
    """#ifdef DEBUG
#define LOG(msg) fprintf(stderr, "%s\\n", msg)
#else
#define LOG(msg)
#endif
void step(int n){ LOG("stepping"); run(n); }""",
    """int is_pow2(unsigned x){
    return x != 0u && (x & (x - 1u)) == 0u;
}""",
    """void reverse(char *s, int n){
    for (int i = 0, j = n - 1; i < j; i++, j--) {
        char t = s[i]; s[i] = s[j]; s[j] = t;
    }
}""",
    """long factorial(int n){
    long f = 1l;
    for (int i = 2; i <= n; i++) f *= i;
    return f;
}""",
    """int sign(double x){
    if (x > 0.0) return 1;
    if (x < 0.0) return -1;
    return 0;
}""",
    """void scale_all(double *xs, int n, double k){
    double *end = xs + n;
    for (; xs != end; ++xs)
        *xs *= k;
}""",
    """int días_totales(int semanas, int extra){
    return semanas * 7 + extra;
}""",
    """unsigned short checksum(const unsigned char *data, int len){
    unsigned acc = 0u;
    for (int i = 0; i < len; i++) acc += data[i];
    return (unsigned short)(acc & 0xFFFFu);
}""",
    """int median3(int a, int b, int c){
    if ((a <= b && b <= c) || (c <= b && b <= a)) return b;
    if ((b <= a && a <= c) || (c <= a && a <= b)) return a;
    return c;
}""",
    """void append(struct node **head, struct node *n){
    while (*head) head = &(*head)->next;
    *head = n;
    n->next = 0;
}""",
    """double poly(const double *c, int deg, double x){
    double acc = c[deg];
    for (int i = deg - 1; i >= 0; i--)
        acc = acc * x + c[i];
    return acc;
}""",
    """int leap(int year){
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}""",
    """void sort2(int *a, int *b){
    if (*a > *b) { int t = *a; *a = *b; *b = t; }
}""",
    """unsigned next_pow2(unsigned v){
    v--;
    v |= v >> 1; v |= v >> 2; v |= v >> 4;
    v |= v >> 8; v |= v >> 16;
    return v + 1u;
}""",
    """int count_char(const char *s, char c){
    int n = 0;
    for (; *s; s++) n += (*s == c);
    return n;
}""",
    """void shift_left(int *a, int n, int k){
    for (int i = 0; i + k < n; i++)
        a[i] = a[i + k];
}""",
    """double mean(const double *xs, int n){
    double s = 0.0;
    for (int i = 0; i < n; i++) s += xs[i];
    return n ? s / n : 0.0;
}""",
    """int wrap(int i, int n){
    int r = i % n;
    return r < 0 ? r + n : r;
}""",
    """void emit_escaped(const char *s){
    for (; *s; s++) {
        if (*s == '"' || *s == '\\\\') putchar('\\\\');
        putchar(*s);
    }
}""",
    """int dot3(const int a[3], const int b[3]){
    return a[0]*b[0] + a[1]*b[1] + a[2]*b[2];
}""",
]

assert len(SNIPPETS) == 50
