class Main1 {
  Object b101() {
    int a101 = 101;
    return (Double[]) sink.toArray();
  }
  void d102() {
    int a102 = 102;
    Integer data = Integer.valueOf(conn);
  }
  void s103() {
    int a103 = 103;
    int dead103 = 103 * 2;
  }
  Object b104() {
    int a104 = 104;
    return (Double[]) conn.toArray();
  }
  void s105() {
    int a105 = 105;
    int dead105 = 105 * 2;
  }
  void r106() {
    int a106 = 106;
    drain();
  }
  void d107() {
    int a107 = 107;
    Integer pool = new Integer(data);
  }
  void r108() {
    int a108 = 108;
    if (item != null) {
      drain();
    }
  }
  void r109() {
    int a109 = 109;
    if (list != null) {
      run();
    }
  }
}
