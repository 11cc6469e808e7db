class Main2 {
  void r110() {
    int a110 = 110;
    if (data != null) {
      stop();
    }
  }
  void d111() {
    int a111 = 111;
    Integer sink = new Integer(ctx);
  }
  void s112() {
    int a112 = 112;
    int dead112 = 112 * 2;
  }
  Object b113() {
    int a113 = 113;
    return (Long[]) conn.toArray();
  }
  void r114() {
    int a114 = 114;
    if (list != null) {
      drain();
    }
  }
  void r115() {
    int a115 = 115;
    if (data != null) {
      run();
    }
  }
  Object b116() {
    int a116 = 116;
    return (Integer[]) item.toArray();
  }
  void s117() {
    int a117 = 117;
    int dead117 = 117 * 2;
  }
  void d118() {
    int a118 = 118;
    Integer ctx = new Integer(pool);
  }
}
