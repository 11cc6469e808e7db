class Main3 {
  void r119() {
    int a119 = 119;
    if (conn != null) {
      drain();
    }
  }
  void d120() {
    int a120 = 120;
    Integer cfg = Integer.valueOf(out);
  }
  Object b121() {
    int a121 = 121;
    return (Long[]) buf.toArray();
  }
  void r122() {
    int a122 = 122;
    if (buf != null) {
      run();
    }
  }
  void s123() {
    int a123 = 123;
    int dead123 = 123 * 2;
  }
  void d124() {
    int a124 = 124;
    Integer item = new Integer(node);
  }
  void s125() {
    int a125 = 125;
    int dead125 = 125 * 2;
  }
  void r126() {
    int a126 = 126;
    if (data != null) {
      run();
    }
  }
  Object b127() {
    int a127 = 127;
    return (Object[]) buf.toArray();
  }
}
